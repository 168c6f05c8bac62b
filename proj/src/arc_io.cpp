#include "hymem/arc_io.hpp"

#include "hymem/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace hymem {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t row) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ConfigError("bad number '" + s + "' on CSV row " + std::to_string(row));
  return v;
}

}  // namespace

void write_arc_csv(std::ostream& os, const HybridArc& arc, const std::vector<std::string>& names) {
  const int n = arc.dim();
  os << "t,j";
  for (int i = 0; i < n; ++i)
    os << ',' << (static_cast<std::size_t>(i) < names.size() ? names[i] : "x" + std::to_string(i + 1));
  os << '\n';
  for (const Segment& s : arc.segments()) {
    for (std::size_t k = 0; k < s.size(); ++k) {
      os << fmt(s.times[k]) << ',' << s.j;
      for (int i = 0; i < n; ++i) os << ',' << fmt(s.values[k * n + i]);
      os << '\n';
    }
  }
}

std::string arc_to_csv(const HybridArc& arc, const std::vector<std::string>& names) {
  std::ostringstream os;
  write_arc_csv(os, arc, names);
  return os.str();
}

HybridArc read_arc_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("empty CSV input");
  const auto header = split(line);
  if (header.size() < 3 || header[0] != "t" || header[1] != "j")
    throw ConfigError("CSV header must start with t,j and name at least one state column");
  const int n = static_cast<int>(header.size()) - 2;

  struct Row {
    int j;
    double t;
    std::vector<double> v;
  };
  std::vector<Row> rows;
  std::size_t row_no = 1;
  while (std::getline(is, line)) {
    ++row_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw ConfigError("CSV row " + std::to_string(row_no) + " has the wrong width");
    Row r;
    r.t = parse_double(cells[0], row_no);
    const double jd = parse_double(cells[1], row_no);
    r.j = static_cast<int>(jd);
    if (static_cast<double>(r.j) != jd) throw ConfigError("non-integer jump index on CSV row " + std::to_string(row_no));
    for (int i = 0; i < n; ++i) r.v.push_back(parse_double(cells[2 + i], row_no));
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ConfigError("CSV has no data rows");
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.j != b.j ? a.j < b.j : a.t < b.t; });

  std::vector<Segment> segs;
  for (const Row& r : rows) {
    if (segs.empty() || segs.back().j != r.j) {
      segs.emplace_back();
      segs.back().j = r.j;
    }
    segs.back().times.push_back(r.t);
    segs.back().values.insert(segs.back().values.end(), r.v.begin(), r.v.end());
  }
  try {
    return HybridArc(n, std::move(segs));
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("CSV does not describe a hybrid arc: ") + e.what());
  }
}

HybridArc arc_from_csv(const std::string& text) {
  std::istringstream is(text);
  return read_arc_csv(is);
}

}  // namespace hymem
