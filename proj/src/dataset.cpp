#include "bregann/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "bregann/bytes.hpp"

namespace bregann {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

// Parses a comma-separated row; returns false if any field is not a number.
bool parse_row(const std::string& line, std::vector<double>& out) {
    out.clear();
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        const std::string field = trim(std::string_view(line).substr(start, comma - start));
        if (field.empty()) return false;
        const char* first = field.data();
        if (*first == '+') ++first;
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(first, field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size()) return false;
        out.push_back(v);
        if (comma == std::string::npos) return true;
        start = comma + 1;
    }
}

}  // namespace

Dataset parse_csv(const std::string& text, CsvHeader header) {
    std::istringstream in(text);
    std::string line;
    std::vector<double> coords, row;
    std::size_t dim = 0, line_no = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const bool numeric = parse_row(line, row);
        if (first_content) {
            first_content = false;
            if (header == CsvHeader::Present || (header == CsvHeader::Auto && !numeric)) continue;
        }
        if (!numeric) throw FormatError("line " + std::to_string(line_no) + " is not a numeric CSV row");
        if (dim == 0) dim = row.size();
        if (row.size() != dim)
            throw FormatError("line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                              " fields, expected " + std::to_string(dim));
        for (double v : row)
            if (!std::isfinite(v)) throw FormatError("line " + std::to_string(line_no) + " has a non-finite value");
        coords.insert(coords.end(), row.begin(), row.end());
    }
    if (dim == 0) throw EmptyInput("dataset has no rows");
    return {PointSet(dim, std::move(coords)), DatasetFormat::Csv};
}

Dataset read_csv(const std::string& path, CsvHeader header) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str(), header);
}

Dataset read_f64le(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const std::uint8_t* p = data.data();
    bytes::Reader in(p, data.data() + data.size());
    const std::uint32_t n = in.u32();
    const std::uint32_t d = in.u32();
    if (n == 0 || d == 0) throw EmptyInput("binary dataset declares no points");
    if (data.size() != 8 + std::uint64_t{n} * d * 8) throw FormatError("binary dataset size does not match its n, d prefix");
    std::vector<double> coords(std::size_t{n} * d);
    for (double& v : coords) {
        v = in.f64();
        if (!std::isfinite(v)) throw FormatError("binary dataset has a non-finite value");
    }
    return {PointSet(d, std::move(coords)), DatasetFormat::F64le};
}

void write_f64le(const std::string& path, const PointSet& points) {
    std::vector<std::uint8_t> out;
    bytes::put_u32(out, static_cast<std::uint32_t>(points.size()));
    bytes::put_u32(out, static_cast<std::uint32_t>(points.dim()));
    for (double v : points.raw()) bytes::put_f64(out, v);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

Dataset read_dataset(const std::string& path, CsvHeader header) {
    auto ends_with = [&](const char* ext) {
        const std::string e(ext);
        return path.size() >= e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0;
    };
    if (ends_with(".bin") || ends_with(".f64")) return read_f64le(path);
    return read_csv(path, header);
}

}  // namespace bregann
