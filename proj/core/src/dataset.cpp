#include "uic/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "uic/artifact.hpp"
#include "uic/errors.hpp"
#include "uic/rng.hpp"

namespace uic {
namespace {

constexpr std::uint64_t kSplitTag = 0x73706c6974ull;  // "split"

[[noreturn]] void malformed(const std::string& path, std::size_t line_no, const std::string& what) {
    throw DataError(path + ":" + std::to_string(line_no) + ": " + what);
}

std::vector<std::string> split_on(const std::string& line, const std::string& sep) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = line.find(sep, pos);
        if (next == std::string::npos) {
            fields.push_back(line.substr(pos));
            return fields;
        }
        fields.push_back(line.substr(pos, next - pos));
        pos = next + sep.size();
    }
}

double to_double(const std::string& s, bool& ok) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        ok = pos == s.size();
        return v;
    } catch (const std::exception&) {
        ok = false;
        return 0.0;
    }
}

std::int64_t to_int64(const std::string& s, bool& ok) {
    try {
        std::size_t pos = 0;
        std::int64_t v = std::stoll(s, &pos);
        ok = pos == s.size();
        return v;
    } catch (const std::exception&) {
        ok = false;
        return 0;
    }
}

}  // namespace

std::vector<InteractionRecord> parse_movielens(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open interaction log: " + path);
    std::vector<InteractionRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_on(line, "::");
        if (fields.size() != 4) malformed(path, line_no, "expected UserID::MovieID::Rating::Timestamp");
        bool ok_value = false, ok_ts = false;
        InteractionRecord rec;
        rec.user_raw_id = fields[0];
        rec.item_raw_id = fields[1];
        rec.value = to_double(fields[2], ok_value);
        rec.timestamp = to_int64(fields[3], ok_ts);
        if (rec.user_raw_id.empty() || rec.item_raw_id.empty() || !ok_value || !ok_ts || rec.timestamp < 0)
            malformed(path, line_no, "malformed field in '" + line + "'");
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw DataError(path + ": no records");
    return records;
}

std::vector<InteractionRecord> parse_csv(const std::string& path, const CsvColumns& columns) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open interaction log: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": no records");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // Plain comma splitting; quoted fields are out of scope for these logs.
    auto header = split_on(line, ",");
    auto column_of = [&](const std::string& name, bool required) -> std::ptrdiff_t {
        if (name.empty()) {
            if (required) throw DataError(path + ": required column mapping is empty");
            return -1;
        }
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            if (required) throw DataError(path + ": missing column '" + name + "'");
            return -1;
        }
        return it - header.begin();
    };
    std::ptrdiff_t user_col = column_of(columns.user, true);
    std::ptrdiff_t item_col = column_of(columns.item, true);
    std::ptrdiff_t value_col = column_of(columns.value, false);
    std::ptrdiff_t ts_col = column_of(columns.timestamp, false);

    std::vector<InteractionRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_on(line, ",");
        auto field = [&](std::ptrdiff_t col) -> const std::string& {
            if (col < 0 || static_cast<std::size_t>(col) >= fields.size())
                malformed(path, line_no, "row has too few columns");
            return fields[static_cast<std::size_t>(col)];
        };
        InteractionRecord rec;
        rec.user_raw_id = field(user_col);
        rec.item_raw_id = field(item_col);
        rec.value = 1.0;
        rec.timestamp = 0;
        if (value_col >= 0) {
            bool ok = false;
            rec.value = to_double(field(value_col), ok);
            if (!ok) malformed(path, line_no, "non-numeric value field");
        }
        if (ts_col >= 0) {
            bool ok = false;
            rec.timestamp = to_int64(field(ts_col), ok);
            if (!ok || rec.timestamp < 0) malformed(path, line_no, "bad timestamp field");
        }
        if (rec.user_raw_id.empty() || rec.item_raw_id.empty())
            malformed(path, line_no, "empty user or item id");
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw DataError(path + ": no records");
    return records;
}

Dataset build_dataset(std::vector<InteractionRecord> records,
                      std::size_t min_user_degree,
                      std::size_t min_item_degree) {
    std::unordered_map<std::string, std::uint32_t> user_tmp, item_tmp;
    std::vector<std::string> user_raw, item_raw;
    auto intern = [](std::unordered_map<std::string, std::uint32_t>& map,
                     std::vector<std::string>& names, const std::string& id) {
        auto [it, inserted] = map.emplace(id, static_cast<std::uint32_t>(names.size()));
        if (inserted) names.push_back(id);
        return it->second;
    };

    // Collapse duplicate (user, item) pairs up front, keeping the latest
    // timestamp; degrees below are counts of distinct counterparts.
    std::unordered_map<std::uint64_t, std::int64_t> latest;
    latest.reserve(records.size());
    for (const auto& rec : records) {
        std::uint32_t u = intern(user_tmp, user_raw, rec.user_raw_id);
        std::uint32_t i = intern(item_tmp, item_raw, rec.item_raw_id);
        std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) | i;
        auto [it, inserted] = latest.emplace(key, rec.timestamp);
        if (!inserted && rec.timestamp > it->second) it->second = rec.timestamp;
    }

    struct Pair {
        std::uint32_t u, i;
        std::int64_t ts;
    };
    std::vector<Pair> pairs;
    pairs.reserve(latest.size());
    for (const auto& [key, ts] : latest)
        pairs.push_back({static_cast<std::uint32_t>(key >> 32),
                         static_cast<std::uint32_t>(key & 0xffffffffu), ts});

    // Zero-degree entities never belong to an interaction set, so thresholds
    // act as at least 1.
    std::size_t user_min = std::max<std::size_t>(min_user_degree, 1);
    std::size_t item_min = std::max<std::size_t>(min_item_degree, 1);
    std::vector<char> user_alive(user_raw.size(), 1), item_alive(item_raw.size(), 1);
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<std::size_t> udeg(user_raw.size(), 0), ideg(item_raw.size(), 0);
        for (const auto& p : pairs)
            if (user_alive[p.u] && item_alive[p.i]) {
                ++udeg[p.u];
                ++ideg[p.i];
            }
        for (std::size_t u = 0; u < user_raw.size(); ++u)
            if (user_alive[u] && udeg[u] < user_min) {
                user_alive[u] = 0;
                changed = true;
            }
        for (std::size_t i = 0; i < item_raw.size(); ++i)
            if (item_alive[i] && ideg[i] < item_min) {
                item_alive[i] = 0;
                changed = true;
            }
    }

    std::vector<std::string> kept_users, kept_items;
    for (std::size_t u = 0; u < user_raw.size(); ++u)
        if (user_alive[u]) kept_users.push_back(user_raw[u]);
    for (std::size_t i = 0; i < item_raw.size(); ++i)
        if (item_alive[i]) kept_items.push_back(item_raw[i]);
    if (kept_users.empty() || kept_items.empty())
        throw DataError("empty dataset after degree filtering");
    std::sort(kept_users.begin(), kept_users.end());
    std::sort(kept_items.begin(), kept_items.end());

    Dataset ds;
    ds.num_users = static_cast<std::uint32_t>(kept_users.size());
    ds.num_items = static_cast<std::uint32_t>(kept_items.size());
    ds.user_ids = std::move(kept_users);
    ds.item_ids = std::move(kept_items);
    for (std::uint32_t u = 0; u < ds.num_users; ++u) ds.user_index[ds.user_ids[u]] = u;
    for (std::uint32_t i = 0; i < ds.num_items; ++i) ds.item_index[ds.item_ids[i]] = i;
    ds.min_user_degree = min_user_degree;
    ds.min_item_degree = min_item_degree;

    ds.interactions.reserve(pairs.size());
    for (const auto& p : pairs) {
        if (!user_alive[p.u] || !item_alive[p.i]) continue;
        ds.interactions.push_back({ds.user_index.at(user_raw[p.u]),
                                   ds.item_index.at(item_raw[p.i]), p.ts});
    }
    std::sort(ds.interactions.begin(), ds.interactions.end(),
              [](const Interaction& a, const Interaction& b) {
                  return std::tie(a.user, a.item) < std::tie(b.user, b.item);
              });
    return ds;
}

Split split(const Dataset& dataset, const SplitSpec& spec) {
    Split out;
    std::size_t begin = 0;
    const auto& all = dataset.interactions;
    while (begin < all.size()) {
        std::size_t end = begin;
        while (end < all.size() && all[end].user == all[begin].user) ++end;
        std::size_t n = end - begin;
        if (n < 3)
            throw DataError("user " + dataset.user_ids[all[begin].user] +
                            " has fewer than 3 interactions; cannot populate all splits");

        // Largest-remainder rounding; remainder ties resolve train, val, test.
        double fracs[3] = {spec.train_fraction, spec.val_fraction, spec.test_fraction};
        std::size_t counts[3];
        double remainders[3];
        std::size_t assigned = 0;
        for (int b = 0; b < 3; ++b) {
            double exact = fracs[b] * static_cast<double>(n);
            counts[b] = static_cast<std::size_t>(std::floor(exact));
            remainders[b] = exact - std::floor(exact);
            assigned += counts[b];
        }
        int order[3] = {0, 1, 2};
        std::stable_sort(order, order + 3,
                         [&](int a, int b) { return remainders[a] > remainders[b]; });
        for (std::size_t leftover = n - assigned, idx = 0; leftover > 0; --leftover, ++idx)
            ++counts[order[idx % 3]];
        if (counts[0] == 0) {
            int donor = counts[1] >= counts[2] ? 1 : 2;
            --counts[donor];
            ++counts[0];
        }

        std::vector<Interaction> shuffled(all.begin() + begin, all.begin() + end);
        auto rng = make_rng(derive_seed(spec.seed, kSplitTag, all[begin].user));
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        out.train.insert(out.train.end(), shuffled.begin(), shuffled.begin() + counts[0]);
        out.val.insert(out.val.end(), shuffled.begin() + counts[0],
                       shuffled.begin() + counts[0] + counts[1]);
        out.test.insert(out.test.end(), shuffled.begin() + counts[0] + counts[1], shuffled.end());
        begin = end;
    }
    auto by_pair = [](const Interaction& a, const Interaction& b) {
        return std::tie(a.user, a.item) < std::tie(b.user, b.item);
    };
    std::sort(out.train.begin(), out.train.end(), by_pair);
    std::sort(out.val.begin(), out.val.end(), by_pair);
    std::sort(out.test.begin(), out.test.end(), by_pair);
    return out;
}

Dataset temporal_prefix(const Dataset& dataset, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ConfigError("temporal prefix fraction must lie in (0,1]");
    std::vector<std::int64_t> stamps;
    stamps.reserve(dataset.interactions.size());
    for (const auto& x : dataset.interactions) stamps.push_back(x.timestamp);
    std::sort(stamps.begin(), stamps.end());
    std::size_t keep = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(stamps.size())));
    keep = std::clamp<std::size_t>(keep, 1, stamps.size());
    std::int64_t cutoff = stamps[keep - 1];

    std::vector<InteractionRecord> records;
    for (const auto& x : dataset.interactions)
        if (x.timestamp <= cutoff)
            records.push_back({dataset.user_ids[x.user], dataset.item_ids[x.item], 1.0,
                               x.timestamp});
    return build_dataset(std::move(records), dataset.min_user_degree, dataset.min_item_degree);
}

void save_dataset(const Dataset& dataset, const std::string& path, const std::string& provenance) {
    auto open = [](const std::string& p) {
        std::ofstream out(p);
        if (!out) throw DataError("cannot write " + p);
        return out;
    };
    {
        std::ofstream out = open(path);
        if (!provenance.empty()) out << provenance << "\n";
        out << "# min_user_degree=" << dataset.min_user_degree
            << " min_item_degree=" << dataset.min_item_degree << "\n";
        out << "users=" << dataset.num_users << " items=" << dataset.num_items
            << " interactions=" << dataset.interactions.size() << "\n";
        for (const auto& x : dataset.interactions)
            out << x.user << "\t" << x.item << "\t" << x.timestamp << "\n";
    }
    {
        std::ofstream out = open(path + ".users");
        if (!provenance.empty()) out << provenance << "\n";
        for (std::uint32_t u = 0; u < dataset.num_users; ++u)
            out << u << "\t" << dataset.user_ids[u] << "\n";
    }
    {
        std::ofstream out = open(path + ".items");
        if (!provenance.empty()) out << provenance << "\n";
        for (std::uint32_t i = 0; i < dataset.num_items; ++i)
            out << i << "\t" << dataset.item_ids[i] << "\n";
    }
}

namespace {

std::vector<std::string> load_id_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open id map: " + path);
    std::vector<std::string> ids;
    std::string line;
    while (next_content_line(in, line)) {
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) throw DataError(path + ": expected index<TAB>raw_id");
        bool ok = false;
        std::int64_t idx = to_int64(line.substr(0, tab), ok);
        if (!ok || idx != static_cast<std::int64_t>(ids.size()))
            throw DataError(path + ": indices must be dense and ascending");
        ids.push_back(line.substr(tab + 1));
    }
    return ids;
}

}  // namespace

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset: " + path);
    Dataset ds;
    std::string line;
    if (!next_content_line(in, line, "# min_user_degree="))
        throw DataError(path + ": missing header");
    if (line.rfind("# min_user_degree=", 0) == 0) {
        if (std::sscanf(line.c_str(), "# min_user_degree=%zu min_item_degree=%zu",
                        &ds.min_user_degree, &ds.min_item_degree) != 2)
            throw DataError(path + ": malformed threshold comment");
        if (!next_content_line(in, line)) throw DataError(path + ": missing header");
    }
    std::size_t users = 0, items = 0, k = 0;
    if (std::sscanf(line.c_str(), "users=%zu items=%zu interactions=%zu", &users, &items, &k) != 3)
        throw DataError(path + ": expected 'users=<n> items=<m> interactions=<k>' header");
    ds.num_users = static_cast<std::uint32_t>(users);
    ds.num_items = static_cast<std::uint32_t>(items);
    ds.interactions.reserve(k);
    for (std::size_t row = 0; row < k; ++row) {
        if (!next_content_line(in, line)) throw DataError(path + ": truncated interaction rows");
        Interaction x;
        long long ts = 0;
        if (std::sscanf(line.c_str(), "%u\t%u\t%lld", &x.user, &x.item, &ts) != 3 ||
            x.user >= ds.num_users || x.item >= ds.num_items)
            throw DataError(path + ": bad interaction row '" + line + "'");
        x.timestamp = ts;
        ds.interactions.push_back(x);
    }
    ds.user_ids = load_id_map(path + ".users");
    ds.item_ids = load_id_map(path + ".items");
    if (ds.user_ids.size() != users || ds.item_ids.size() != items)
        throw DataError(path + ": id map sizes disagree with header");
    for (std::uint32_t u = 0; u < ds.num_users; ++u) ds.user_index[ds.user_ids[u]] = u;
    for (std::uint32_t i = 0; i < ds.num_items; ++i) ds.item_index[ds.item_ids[i]] = i;
    return ds;
}

std::vector<std::uint32_t> user_degrees(const std::vector<Interaction>& interactions,
                                        std::uint32_t num_users) {
    std::vector<std::uint32_t> deg(num_users, 0);
    for (const auto& x : interactions) ++deg[x.user];
    return deg;
}

std::vector<std::uint32_t> item_degrees(const std::vector<Interaction>& interactions,
                                        std::uint32_t num_items) {
    std::vector<std::uint32_t> deg(num_items, 0);
    for (const auto& x : interactions) ++deg[x.item];
    return deg;
}

}  // namespace uic
