#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <vector>

namespace dprp::csv {

// Shortest round-trip decimal representation; '.' decimal point, locale
// independent, byte-stable across runs.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_u64_hex(std::uint64_t v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, 16);
    return std::string(buf, res.ptr);
}

// Minimal CSV table: comment lines, one header, deterministic row order.
class Writer {
  public:
    void comment(const std::string& line) { comments_.push_back(line); }
    void header(std::vector<std::string> names) { header_ = std::move(names); }

    class Row {
      public:
        explicit Row(Writer& w) : writer_(w) {}
        Row& add(const std::string& v) {
            cells_.push_back(v);
            return *this;
        }
        Row& add(double v) { return add(format_double(v)); }
        Row& add(int v) { return add(std::to_string(v)); }
        Row& add(std::int64_t v) { return add(std::to_string(v)); }
        Row& add(std::size_t v) { return add(std::to_string(v)); }
        ~Row() { writer_.rows_.push_back(std::move(cells_)); }

      private:
        Writer& writer_;
        std::vector<std::string> cells_;
    };

    Row row() { return Row(*this); }

    std::string str() const {
        std::string out;
        for (const auto& c : comments_) {
            out += "# ";
            out += c;
            out += '\n';
        }
        append_line(out, header_);
        for (const auto& r : rows_) append_line(out, r);
        return out;
    }

  private:
    static void append_line(std::string& out, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    }

    std::vector<std::string> comments_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;

    friend class Row;
};

}  // namespace dprp::csv
