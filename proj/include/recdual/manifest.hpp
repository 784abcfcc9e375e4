#pragma once
// Run manifests: a flat key=value text file written next to every output the
// CLI produces, echoing the configuration, versions, wall time and headline
// result scalars. Written on failure too (with status/error keys) so partial
// runs stay diagnosable.

#include <string>
#include <utility>
#include <vector>

namespace recdual {

class Manifest {
  public:
    Manifest();

    void set(const std::string& key, const std::string& value);
    // Without this overload a string literal would decay to const char* and
    // take the bool overload (pointer-to-bool is a standard conversion and
    // outranks construction of std::string).
    void set(const std::string& key, const char* value) { set(key, std::string(value)); }
    void set(const std::string& key, double value);
    void set(const std::string& key, long long value);
    void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
    void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

    std::string str() const;

    // Writes "<output_path>.manifest".
    void save_next_to(const std::string& output_path) const;

  private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

} // namespace recdual
