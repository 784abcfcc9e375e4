#include "recdual/manifest.hpp"

#include "recdual/text_io.hpp"
#include "recdual/version.hpp"

namespace recdual {

Manifest::Manifest() {
    set("tool", std::string("recdual"));
    set("tool_version", std::string(RECDUAL_VERSION_STRING));
#if defined(__VERSION__)
    set("compiler", std::string("gcc " __VERSION__));
#else
    set("compiler", std::string("unknown"));
#endif
}

void Manifest::set(const std::string& key, const std::string& value) {
    for (auto& kv : entries_) {
        if (kv.first == key) {
            kv.second = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

void Manifest::set(const std::string& key, double value) { set(key, format_double(value)); }

void Manifest::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

std::string Manifest::str() const {
    std::string out;
    for (const auto& kv : entries_) {
        out += kv.first;
        out += '=';
        out += kv.second;
        out += '\n';
    }
    return out;
}

void Manifest::save_next_to(const std::string& output_path) const {
    write_file(output_path + ".manifest", str());
}

} // namespace recdual
