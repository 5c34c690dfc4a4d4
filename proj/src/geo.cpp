#include "geogrouse/geo.hpp"

#include <cstring>
#include <stdexcept>

namespace geogrouse {

std::string variant_name(GsVariant v) {
    switch (v) {
        case GsVariant::none: return "none";
        case GsVariant::kmeans: return "kmeans";
        case GsVariant::proto: return "proto";
        case GsVariant::can: return "can";
    }
    return "?";
}

GsVariant variant_from_name(const std::string& name) {
    if (name == "none") return GsVariant::none;
    if (name == "kmeans") return GsVariant::kmeans;
    if (name == "proto") return GsVariant::proto;
    if (name == "can") return GsVariant::can;
    throw std::invalid_argument("unknown gs_variant '" + name + "' (expected none|kmeans|proto|can)");
}

int aoi_at_level(const std::array<int, kAoiLevels>& path, int level) {
    if (level < 1 || level > kAoiLevels) {
        throw std::invalid_argument("aoi_at_level: level " + std::to_string(level) +
                                    " outside 1.." + std::to_string(kAoiLevels));
    }
    return path[static_cast<std::size_t>(level - 1)];
}

static void check_id(int id, std::size_t vocab, const char* feature) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
        throw std::out_of_range(std::string("encode: ") + feature + " id " + std::to_string(id) +
                                " outside vocabulary of size " + std::to_string(vocab));
    }
}

struct GeoLookup {
    int city, gps, aoi, hour, season;
};

static GeoLookup geo_ids(const GeoContext& ctx, const ModelConfig& cfg, const Vocabs& vocabs) {
    GeoLookup ids{ctx.city, ctx.gps_cell, aoi_at_level(ctx.aoi_path, cfg.aoi_level), ctx.hour,
                  ctx.season};
    check_id(ids.city, vocabs.city, "city");
    check_id(ids.gps, vocabs.gps_cell, "gps_cell");
    check_id(ids.aoi, vocabs.aoi, "aoi");
    check_id(ids.hour, vocabs.hour, "hour");
    check_id(ids.season, vocabs.season, "season");
    return ids;
}

Tensor encode_geo(const GeoContext& ctx, const ParamStore& ps, const ModelConfig& cfg,
                  const Vocabs& vocabs) {
    GeoLookup ids = geo_ids(ctx, cfg, vocabs);
    Tensor g({cfg.d_g()});
    double* out = g.data.data();
    auto copy_row = [&out](const Tensor& table, int row, std::size_t dim) {
        std::memcpy(out, table.row(static_cast<std::size_t>(row)), dim * sizeof(double));
        out += dim;
    };
    copy_row(ps.param("emb.city"), ids.city, cfg.dim_city);
    copy_row(ps.param("emb.gps"), ids.gps, cfg.dim_gps);
    copy_row(ps.param("emb.aoi"), ids.aoi, cfg.dim_aoi);
    copy_row(ps.param("emb.hour"), ids.hour, cfg.dim_hour);
    copy_row(ps.param("emb.season"), ids.season, cfg.dim_season);
    return g;
}

void encode_geo_backward(const GeoContext& ctx, const Tensor& dg, ParamStore& ps,
                         const ModelConfig& cfg, const Vocabs& vocabs) {
    GeoLookup ids = geo_ids(ctx, cfg, vocabs);
    const double* in = dg.data.data();
    auto add_row = [&in](Tensor& gtable, int row, std::size_t dim) {
        double* dst = gtable.row(static_cast<std::size_t>(row));
        for (std::size_t i = 0; i < dim; ++i) dst[i] += in[i];
        in += dim;
    };
    add_row(ps.grad("emb.city"), ids.city, cfg.dim_city);
    add_row(ps.grad("emb.gps"), ids.gps, cfg.dim_gps);
    add_row(ps.grad("emb.aoi"), ids.aoi, cfg.dim_aoi);
    add_row(ps.grad("emb.hour"), ids.hour, cfg.dim_hour);
    add_row(ps.grad("emb.season"), ids.season, cfg.dim_season);
}

EncodedState encode_state(const State& s, const ParamStore& ps, const ModelConfig& cfg,
                          const Vocabs& vocabs) {
    if (s.profile_ids.size() != vocabs.profile.size()) {
        throw std::invalid_argument("encode_state: expected " + std::to_string(vocabs.profile.size()) +
                                    " profile ids, got " + std::to_string(s.profile_ids.size()));
    }
    EncodedState enc;
    enc.profile_vec = Tensor({vocabs.profile.size() * cfg.dim_profile});
    for (std::size_t f = 0; f < vocabs.profile.size(); ++f) {
        check_id(s.profile_ids[f], vocabs.profile[f], "profile");
        const Tensor& table = ps.param("emb.profile" + std::to_string(f));
        std::memcpy(enc.profile_vec.data.data() + f * cfg.dim_profile,
                    table.row(static_cast<std::size_t>(s.profile_ids[f])),
                    cfg.dim_profile * sizeof(double));
    }
    const Tensor& item_table = ps.param("emb.item_seq");
    const Tensor& cat_table = ps.param("emb.cat_seq");
    enc.seq.reserve(s.behavior.size());
    for (const auto& [item, cat] : s.behavior) {
        check_id(item, vocabs.items, "item");
        check_id(cat, vocabs.categories, "category");
        Tensor e({cfg.dim_item});
        const double* ir = item_table.row(static_cast<std::size_t>(item));
        const double* cr = cat_table.row(static_cast<std::size_t>(cat));
        for (std::size_t i = 0; i < cfg.dim_item; ++i) e.data[i] = ir[i] + cr[i];
        enc.seq.push_back(std::move(e));
    }
    enc.g = encode_geo(s.geo, ps, cfg, vocabs);
    return enc;
}

}  // namespace geogrouse
