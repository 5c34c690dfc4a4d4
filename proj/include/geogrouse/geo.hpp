#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "geogrouse/tensor.hpp"

namespace geogrouse {

constexpr int kAoiLevels = 5;
constexpr std::size_t kHourVocab = 24;
constexpr std::size_t kSeasonVocab = 4;

/// Raw spatiotemporal identifiers for one state.
struct GeoContext {
    int city = 0;
    int gps_cell = 0;
    std::array<int, kAoiLevels> aoi_path{};  // coarse -> fine
    int hour = 0;
    int season = 0;

    bool operator==(const GeoContext&) const = default;
};

struct State {
    std::vector<int> profile_ids;
    std::vector<std::pair<int, int>> behavior;  // (item_id, category_id)
    GeoContext geo;

    bool operator==(const State&) const = default;
};

/// Vocabulary sizes for every embedded feature. aoi is the vocabulary of the
/// single active AOI level.
struct Vocabs {
    std::size_t city = 1;
    std::size_t gps_cell = 1;
    std::size_t aoi = 1;
    std::size_t hour = kHourVocab;
    std::size_t season = kSeasonVocab;
    std::size_t items = 1;
    std::size_t categories = 1;
    std::vector<std::size_t> profile;  // one vocab per profile feature
};

enum class GsVariant { none, kmeans, proto, can };

std::string variant_name(GsVariant v);
GsVariant variant_from_name(const std::string& name);

/// Model hyperparameters shared by the geo encoder and the policy tower.
struct ModelConfig {
    std::size_t dim_city = 8;
    std::size_t dim_gps = 8;
    std::size_t dim_aoi = 16;
    std::size_t dim_hour = 4;
    std::size_t dim_season = 4;
    int aoi_level = 3;  // 1..5, exactly one level active

    std::size_t dim_item = 8;     // d_i, behavior-sequence embedding width
    std::size_t dim_action = 8;   // d_a
    std::size_t dim_profile = 4;  // per profile feature
    std::size_t attn_hidden = 16;
    std::size_t fuse_hidden = 16;
    std::size_t micro_hidden = 4;  // m, micro-MLP hidden width
    std::size_t n_groups = 3;      // K
    double proto_temp = 0.1;       // T
    GsVariant variant = GsVariant::can;

    std::size_t d_g() const { return dim_city + dim_gps + dim_aoi + dim_hour + dim_season; }
    std::size_t d_profile(std::size_t n_profile_feats) const { return n_profile_feats * dim_profile; }
    /// Packed micro-MLP parameter length P = d_a*m + m + m*d_a + d_a.
    std::size_t micro_param_len() const {
        return dim_action * micro_hidden + micro_hidden + micro_hidden * dim_action + dim_action;
    }

    bool operator==(const ModelConfig&) const = default;
};

/// AOI id at a 1-based hierarchy level.
int aoi_at_level(const std::array<int, kAoiLevels>& path, int level);

/// Concatenation of the five spatiotemporal feature embeddings; length d_g.
Tensor encode_geo(const GeoContext& ctx, const ParamStore& ps, const ModelConfig& cfg,
                  const Vocabs& vocabs);

/// Accumulates d(geo tables) given the upstream gradient dg.
void encode_geo_backward(const GeoContext& ctx, const Tensor& dg, ParamStore& ps,
                         const ModelConfig& cfg, const Vocabs& vocabs);

/// Dense encodings of the three state parts consumed by the policy tower.
struct EncodedState {
    Tensor profile_vec;       // [n_profile_feats * dim_profile]
    std::vector<Tensor> seq;  // one [d_i] embedding per behavior item; may be empty
    Tensor g;                 // [d_g]
};

EncodedState encode_state(const State& s, const ParamStore& ps, const ModelConfig& cfg,
                          const Vocabs& vocabs);

}  // namespace geogrouse
