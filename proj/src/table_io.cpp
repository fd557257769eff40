#include "cavens/table_io.hpp"

#include <boost/uuid/detail/sha1.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace cavens::io {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string to_csv(const scenarios::Table& table) {
    std::string out;
    for (const auto& c : table.columns) out += csv_escape(c) + ",";
    out += "status\r\n";
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        for (double v : table.rows[i]) out += format_number(v) + ",";
        out += csv_escape(i < table.status.size() ? table.status[i] : std::string()) + "\r\n";
    }
    return out;
}

namespace {

// Splits one CSV record starting at `pos`; advances `pos` past the line end.
std::vector<std::string> read_record(const std::string& text, std::size_t& pos) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    while (pos < text.size()) {
        const char c = text[pos];
        if (quoted) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    cur += '"';
                    ++pos;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
            ++pos;
            continue;
        }
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
            ++pos;
            fields.push_back(cur);
            return fields;
        } else {
            cur += c;
        }
        ++pos;
    }
    fields.push_back(cur);
    return fields;
}

double parse_number(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError("csv: not a number: '" + s + "'");
    return v;
}

}  // namespace

scenarios::Table parse_csv(const std::string& text) {
    scenarios::Table t;
    std::size_t pos = 0;
    if (text.empty()) throw ConfigError("csv: empty input");
    auto header = read_record(text, pos);
    if (header.empty() || header.back() != "status") throw ConfigError("csv: last column must be 'status'");
    header.pop_back();
    t.columns = header;
    while (pos < text.size()) {
        auto rec = read_record(text, pos);
        if (rec.size() == 1 && rec[0].empty()) continue;
        if (rec.size() != t.columns.size() + 1) throw ConfigError("csv: ragged row");
        std::vector<double> row;
        for (std::size_t i = 0; i < t.columns.size(); ++i) row.push_back(parse_number(rec[i]));
        t.rows.push_back(std::move(row));
        t.status.push_back(rec.back());
    }
    return t;
}

void write_text_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    os << content;
    if (!os) throw ConfigError("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string sha1_hex(const std::string& data) {
    boost::uuids::detail::sha1 h;
    h.process_bytes(data.data(), data.size());
    boost::uuids::detail::sha1::digest_type d;
    h.get_digest(d);
    char buf[41];
    for (int i = 0; i < 5; ++i) std::snprintf(buf + 8 * i, 9, "%08x", d[i]);
    return std::string(buf, 40);
}

}  // namespace cavens::io

namespace cavens::scenarios {

std::vector<std::string> write_result(const ScenarioResult& result) {
    namespace fs = std::filesystem;
    const fs::path dir(result.spec.output_dir.empty() ? "." : result.spec.output_dir);
    const std::string base = result.spec.basename();
    std::vector<std::string> written;

    const auto csv = (dir / (base + ".csv")).string();
    io::write_text_file(csv, io::to_csv(result.table));
    written.push_back(csv);
    if (!result.summary.columns.empty()) {
        const auto sum = (dir / (base + "_summary.csv")).string();
        io::write_text_file(sum, io::to_csv(result.summary));
        written.push_back(sum);
    }
    auto meta = result.metadata;
    meta["files"] = written;
    const auto json = (dir / (base + ".json")).string();
    io::write_text_file(json, meta.dump(2) + "\n");
    written.push_back(json);
    return written;
}

}  // namespace cavens::scenarios
