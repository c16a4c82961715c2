#include "uic/model.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

namespace uic {

FusionMode fusion_from_string(const std::string& name) {
    if (name == "none") return FusionMode::None;
    if (name == "concat") return FusionMode::Concat;
    if (name == "attention") return FusionMode::Attention;
    throw ConfigError("unknown fusion mode '" + name + "'");
}

std::string to_string(FusionMode mode) {
    switch (mode) {
        case FusionMode::None: return "none";
        case FusionMode::Concat: return "concat";
        case FusionMode::Attention: return "attention";
    }
    return "none";
}

std::vector<std::uint32_t> sample_negatives(const BipartiteGraph& bg, std::uint32_t user,
                                            std::size_t n, std::mt19937_64& rng) {
    if (user >= bg.num_users) throw DataError("sample_negatives: user index out of range");
    auto engaged = bg.items_of(user);
    if (engaged.size() >= bg.num_items)
        throw DataError("sample_negatives: user engaged every item");
    if (n > bg.num_items - engaged.size())
        throw DataError("sample_negatives: fewer non-engaged items than requested");
    std::vector<std::uint32_t> out;
    out.reserve(n);
    std::uniform_int_distribution<std::uint32_t> uniform(0, bg.num_items - 1);
    while (out.size() < n) {
        std::uint32_t candidate = uniform(rng);
        if (std::binary_search(engaged.begin(), engaged.end(), candidate)) continue;
        if (std::find(out.begin(), out.end(), candidate) != out.end()) continue;
        out.push_back(candidate);
    }
    return out;
}

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
        throw DataError(path + ": truncated model file");
    return v;
}

std::uint64_t read_u64(std::istream& in, const std::string& path) {
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
        throw DataError(path + ": truncated model file");
    return v;
}

MatrixX<float> shape_block(const std::string& path, const std::string& name,
                           const std::vector<float>& data, Eigen::Index rows,
                           Eigen::Index cols) {
    if (rows <= 0 || cols <= 0 ||
        data.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        throw DataError(path + ": block '" + name + "' has inconsistent size");
    MatrixX<float> m(rows, cols);
    std::memcpy(m.data(), data.data(), data.size() * sizeof(float));
    return m;
}

}  // namespace

void save_model(const TwoTowerModel& model, const std::string& path,
                const std::string& provenance) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    if (!provenance.empty()) out << provenance << "\n";
    out << "d_in=" << model.d_in << " d_out=" << model.d_out << " K=" << model.num_clusters
        << " fusion=" << to_string(model.fusion) << "\n";
    for_each_block(model, [&](const std::string& name, const MatrixX<float>& block) {
        write_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u64(out, static_cast<std::uint64_t>(block.size()));
        out.write(reinterpret_cast<const char*>(block.data()),
                  static_cast<std::streamsize>(block.size() * sizeof(float)));
    });
    if (!out) throw DataError("write failed: " + path);
}

TwoTowerModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model: " + path);
    std::string line;
    long long d_in = 0, d_out = 0, k = 0;
    char fusion_buf[32] = {0};
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') continue;
        break;
    }
    if (std::sscanf(line.c_str(), "d_in=%lld d_out=%lld K=%lld fusion=%31s", &d_in, &d_out,
                    &k, fusion_buf) != 4)
        throw DataError(path + ": malformed model header");

    // Blocks arrive in for_each_block order; keep that order for the tower
    // layer chain while allowing lookups by name.
    std::vector<std::pair<std::string, std::vector<float>>> blocks;
    while (in.peek() != std::char_traits<char>::eof()) {
        std::uint32_t name_len = read_u32(in, path);
        if (name_len == 0 || name_len > 256) throw DataError(path + ": bad block name length");
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) throw DataError(path + ": truncated model file");
        std::uint64_t count = read_u64(in, path);
        std::vector<float> data(count);
        if (!in.read(reinterpret_cast<char*>(data.data()),
                     static_cast<std::streamsize>(count * sizeof(float))))
            throw DataError(path + ": truncated block '" + name + "'");
        blocks.emplace_back(std::move(name), std::move(data));
    }
    auto find = [&](const std::string& name) -> const std::vector<float>* {
        for (const auto& [n, data] : blocks)
            if (n == name) return &data;
        return nullptr;
    };
    auto require = [&](const std::string& name) -> const std::vector<float>& {
        const auto* data = find(name);
        if (!data) throw DataError(path + ": missing block '" + name + "'");
        return *data;
    };

    TwoTowerModel model;
    model.fusion = fusion_from_string(fusion_buf);
    model.d_in = static_cast<Eigen::Index>(d_in);
    model.d_out = static_cast<Eigen::Index>(d_out);
    model.num_clusters = static_cast<Eigen::Index>(k);
    if (model.d_in <= 0 || model.d_out <= 0) throw DataError(path + ": bad dimensions");

    const auto& ue = require("user_embeddings");
    const auto& ie = require("item_embeddings");
    if (ue.size() % d_in != 0 || ie.size() % d_in != 0)
        throw DataError(path + ": embedding tables not divisible by d_in");
    model.num_users = static_cast<Eigen::Index>(ue.size()) / model.d_in;
    model.num_items = static_cast<Eigen::Index>(ie.size()) / model.d_in;
    model.user_embeddings = shape_block(path, "user_embeddings", ue, model.num_users, model.d_in);
    model.item_embeddings = shape_block(path, "item_embeddings", ie, model.num_items, model.d_in);

    if (model.fusion == FusionMode::Concat) {
        const auto& w1 = require("w1");
        if (k <= 0 || w1.size() % k != 0) throw DataError(path + ": w1 not divisible by K");
        model.d_interest = static_cast<Eigen::Index>(w1.size()) / model.num_clusters;
        model.w1 = shape_block(path, "w1", w1, model.num_clusters, model.d_interest);
        model.w2 = shape_block(path, "w2", require("w2"), model.d_interest + model.d_in,
                               model.d_in);
    }
    if (model.fusion == FusionMode::Attention) {
        model.cluster_embeddings = shape_block(path, "cluster_embeddings",
                                               require("cluster_embeddings"),
                                               model.num_clusters, model.d_out);
    }

    auto load_tower = [&](const std::string& prefix, Tower<float>& tower) {
        Eigen::Index in_dim = model.d_in;
        for (std::size_t l = 0;; ++l) {
            const auto* w = find(prefix + ".w" + std::to_string(l));
            if (!w) break;
            const auto& b = require(prefix + ".b" + std::to_string(l));
            Eigen::Index width = static_cast<Eigen::Index>(b.size());
            tower.weights.push_back(
                shape_block(path, prefix + ".w" + std::to_string(l), *w, in_dim, width));
            tower.biases.push_back(
                shape_block(path, prefix + ".b" + std::to_string(l), b, 1, width));
            in_dim = width;
        }
        if (tower.weights.empty() || in_dim != model.d_out)
            throw DataError(path + ": " + prefix + " does not end at d_out");
    };
    load_tower("user_tower", model.user_tower);
    load_tower("item_tower", model.item_tower);
    return model;
}

void export_embeddings(const MatrixX<float>& matrix, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    std::int32_t header[3] = {static_cast<std::int32_t>(matrix.rows()),
                              static_cast<std::int32_t>(matrix.cols()), 1};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(matrix.data()),
              static_cast<std::streamsize>(matrix.size() * sizeof(float)));
    if (!out) throw DataError("write failed: " + path);
}

MatrixX<float> load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open embeddings: " + path);
    std::int32_t header[3] = {0, 0, 0};
    if (!in.read(reinterpret_cast<char*>(header), sizeof(header)))
        throw DataError(path + ": truncated embedding header");
    if (header[0] <= 0 || header[1] <= 0 || header[2] != 1)
        throw DataError(path + ": bad embedding header");
    MatrixX<float> m(header[0], header[1]);
    if (!in.read(reinterpret_cast<char*>(m.data()),
                 static_cast<std::streamsize>(m.size() * sizeof(float))))
        throw DataError(path + ": truncated embedding data");
    return m;
}

}  // namespace uic
