#include "uic/artifact.hpp"

#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <istream>
#include <sstream>
#include <string>

namespace uic {

std::string digest_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream out;
    out << std::hex;
    for (int shift = 60; shift >= 0; shift -= 4) out << ((h >> shift) & 0xf);
    return out.str();
}

std::string iso8601_utc(std::int64_t epoch_seconds) {
    std::time_t t = static_cast<std::time_t>(epoch_seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::int64_t artifact_epoch() {
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        long long v = std::strtoll(env, &end, 10);
        if (end != env && *end == '\0') return v;
    }
    return static_cast<std::int64_t>(std::time(nullptr));
}

std::string provenance_line(const std::string& tool, const std::string& config_digest,
                            std::uint64_t seed) {
    return "# generated-by=uic " + tool + " config=" + config_digest +
           " seed=" + std::to_string(seed) + " at=" + iso8601_utc(artifact_epoch());
}

bool next_content_line(std::istream& in, std::string& line, const std::string& keep_prefix) {
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (!keep_prefix.empty() && line.rfind(keep_prefix, 0) == 0) return true;
            continue;
        }
        return true;
    }
    return false;
}

}  // namespace uic
