#include <algorithm>
#include <charconv>
#include <fstream>
#include <string>

#include "ulab/data.hpp"
#include "ulab/error.hpp"

namespace ulab::data {
namespace {

void append_double(std::string& line, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  line.append(buf, res.ptr);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  std::string line;
  for (std::size_t d = 0; d < ds.dims(); ++d) line += "f" + std::to_string(d) + ",";
  line += "label\n";
  out << line;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    line.clear();
    for (double v : ds.features.row(r)) {
      append_double(line, v);
      line += ',';
    }
    line += std::to_string(ds.labels[r]);
    line += '\n';
    out << line;
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Dataset read_csv(const std::filesystem::path& path, std::size_t class_count, Scaling scaling) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty CSV " + path.string());
  const auto header = split_fields(line);
  if (header.size() < 2 || header.back() != "label") throw FormatError("CSV header must end with 'label'");
  const std::size_t dims = header.size() - 1;
  for (std::size_t d = 0; d < dims; ++d) {
    if (header[d] != "f" + std::to_string(d)) throw FormatError("unexpected CSV header field '" + std::string(header[d]) + "'");
  }

  Dataset ds;
  ds.scaling = scaling;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != dims + 1) throw FormatError("CSV line " + std::to_string(line_no) + " has wrong field count");
    for (std::size_t d = 0; d < dims; ++d) {
      double v = 0.0;
      const auto res = std::from_chars(fields[d].data(), fields[d].data() + fields[d].size(), v);
      if (res.ec != std::errc() || res.ptr != fields[d].data() + fields[d].size()) {
        throw FormatError("bad number on CSV line " + std::to_string(line_no));
      }
      values.push_back(v);
    }
    int label = 0;
    const auto res = std::from_chars(fields[dims].data(), fields[dims].data() + fields[dims].size(), label);
    if (res.ec != std::errc()) throw FormatError("bad label on CSV line " + std::to_string(line_no));
    ds.labels.push_back(label);
  }
  ds.features.rows = ds.labels.size();
  ds.features.cols = dims;
  ds.features.data = std::move(values);
  if (class_count == 0) {
    const int max_label = ds.labels.empty() ? 1 : *std::max_element(ds.labels.begin(), ds.labels.end());
    class_count = std::max<std::size_t>(2, static_cast<std::size_t>(std::max(max_label, 0)) + 1);
  }
  ds.class_count = class_count;
  ds.validate();
  return ds;
}

}  // namespace ulab::data
