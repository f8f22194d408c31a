#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bregann/points.hpp"

namespace bregann {

enum class DatasetFormat { Csv, F64le };

struct Dataset {
    PointSet points;
    DatasetFormat format = DatasetFormat::Csv;
};

// CSV: one point per line, comma separated. A first line that does not parse
// as numbers is taken as a header unless `header` forces the choice.
enum class CsvHeader { Auto, Present, Absent };

Dataset read_csv(const std::string& path, CsvHeader header = CsvHeader::Auto);
Dataset parse_csv(const std::string& text, CsvHeader header = CsvHeader::Auto);

// Binary: u32 n, u32 d (little-endian), then n*d f64 little-endian, row-major.
Dataset read_f64le(const std::string& path);
void write_f64le(const std::string& path, const PointSet& points);

// Picks the reader from the extension: .bin/.f64 are binary, anything else CSV.
Dataset read_dataset(const std::string& path, CsvHeader header = CsvHeader::Auto);

}  // namespace bregann
