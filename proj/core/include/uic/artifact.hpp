#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace uic {

// Builds the standard artifact comment line:
//   `# generated-by=uic <tool> config=<hash> seed=<seed> at=<iso8601>`
// The timestamp honors SOURCE_DATE_EPOCH when set so that re-runs of the same
// pipeline produce byte-identical files.
std::string provenance_line(const std::string& tool, const std::string& config_digest,
                            std::uint64_t seed);

// FNV-1a over the canonical `key=value\n` dump of a config; stable across runs.
std::string digest_hex(const std::string& text);

// UTC `YYYY-MM-DDTHH:MM:SSZ` for the given epoch seconds.
std::string iso8601_utc(std::int64_t epoch_seconds);

// SOURCE_DATE_EPOCH if set and parseable, otherwise the current wall clock.
std::int64_t artifact_epoch();

// Reads one line, skipping blank lines and `#` comments that are not the
// given required prefix. Returns false at EOF. Lines beginning with
// `keep_prefix` (e.g. "# K=") are returned even though they start with '#'.
bool next_content_line(std::istream& in, std::string& line,
                       const std::string& keep_prefix = "");

}  // namespace uic
