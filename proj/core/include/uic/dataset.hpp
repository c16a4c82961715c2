#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace uic {

// One raw line of an interaction log, before any filtering or indexing.
struct InteractionRecord {
    std::string user_raw_id;
    std::string item_raw_id;
    double value = 0.0;        // original rating or count; binarized later
    std::int64_t timestamp = 0;
};

// A binarized engagement; the label is implicitly 1 for every stored entry.
struct Interaction {
    std::uint32_t user = 0;
    std::uint32_t item = 0;
    std::int64_t timestamp = 0;

    friend bool operator==(const Interaction&, const Interaction&) = default;
};

// Dense-indexed, degree-filtered, deduplicated interaction set.
//
// Indices are dense in [0, num_users) / [0, num_items); the raw-id maps are
// bijections restricted to the surviving ids. Interactions are sorted by
// (user, item) and hold no duplicate (user, item) pair. Immutable once built.
struct Dataset {
    std::uint32_t num_users = 0;
    std::uint32_t num_items = 0;
    std::vector<Interaction> interactions;
    std::vector<std::string> user_ids;  // dense index -> raw id
    std::vector<std::string> item_ids;
    std::unordered_map<std::string, std::uint32_t> user_index;  // raw id -> dense index
    std::unordered_map<std::string, std::uint32_t> item_index;
    // Thresholds the dataset was filtered with; temporal_prefix re-filters
    // with the same values.
    std::size_t min_user_degree = 0;
    std::size_t min_item_degree = 0;
};

struct SplitSpec {
    double train_fraction = 0.8;
    double val_fraction = 0.1;
    double test_fraction = 0.1;
    std::uint64_t seed = 0;
};

struct Split {
    std::vector<Interaction> train;
    std::vector<Interaction> val;
    std::vector<Interaction> test;
};

// Parses MovieLens `ratings.dat` lines: `UserID::MovieID::Rating::Timestamp`.
// Malformed lines raise DataError naming the line number; an empty file raises
// DataError("no records").
std::vector<InteractionRecord> parse_movielens(const std::string& path);

// Column names of a generic comma-separated log with a header row.
struct CsvColumns {
    std::string user;
    std::string item;
    std::string value;      // optional: empty means "constant 1"
    std::string timestamp;  // optional: empty means "constant 0"
};

std::vector<InteractionRecord> parse_csv(const std::string& path, const CsvColumns& columns);

// Iteratively drops users/items below the degree thresholds until a fixed
// point, collapses duplicate (user,item) pairs keeping the latest timestamp,
// and re-indexes surviving raw ids densely in sorted raw-id order.
Dataset build_dataset(std::vector<InteractionRecord> records,
                      std::size_t min_user_degree,
                      std::size_t min_item_degree);

// Seeded per-user random partition with largest-remainder rounding; the train
// bucket wins remainder ties, then val, then test. Requires every user to have
// at least 3 interactions.
Split split(const Dataset& dataset, const SplitSpec& spec);

// Keeps interactions with timestamp <= the fraction-quantile of all
// timestamps, then re-applies the dataset's own degree thresholds.
Dataset temporal_prefix(const Dataset& dataset, double fraction);

// Plain-text serialization: `users=<n> items=<m> interactions=<k>` header then
// `user<TAB>item<TAB>timestamp` rows; id maps go to `<path>.users` /
// `<path>.items` as `index<TAB>raw_id` rows. `provenance`, when non-empty, is
// written as a leading `#` comment on each file (loaders skip comments).
void save_dataset(const Dataset& dataset, const std::string& path,
                  const std::string& provenance = "");
Dataset load_dataset(const std::string& path);

// Per-user interaction counts within an arbitrary interaction subset.
std::vector<std::uint32_t> user_degrees(const std::vector<Interaction>& interactions,
                                        std::uint32_t num_users);
std::vector<std::uint32_t> item_degrees(const std::vector<Interaction>& interactions,
                                        std::uint32_t num_items);

}  // namespace uic
