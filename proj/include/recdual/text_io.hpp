#pragma once
// Small text I/O helpers shared by the model reader, CSV writers and the CLI.
//
// All floating point output uses the shortest representation that round-trips
// to the same double (std::to_chars), so identical runs produce byte-identical
// files and save/load round trips are bit-exact.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace recdual {

// Thrown on any file-format or filesystem problem. The CLI maps it to exit
// code 3.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Shortest round-trip decimal form of a double ("0.1", "1e-09", "inf", ...).
std::string format_double(double v);

// Parse helpers that reject trailing garbage.
double parse_double(const std::string& tok);
long long parse_int(const std::string& tok);

// Whitespace split / trim.
std::vector<std::string> split_ws(const std::string& line);
std::string trim(const std::string& s);

// Whole-file read/write (binary mode, so no newline translation).
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Incremental CSV writer. Cells are joined with ',' and rows end with '\n'.
class CsvWriter {
  public:
    void cell(const std::string& v);
    void cell(double v);
    void cell(long long v);
    void cell(int v) { cell(static_cast<long long>(v)); }
    void cell(uint64_t v) { cell(static_cast<long long>(v)); }
    void end_row();
    const std::string& str() const { return buf_; }
    void save(const std::string& path) const { write_file(path, buf_); }

  private:
    std::string buf_;
    bool row_open_ = false;
};

} // namespace recdual
