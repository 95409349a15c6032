#include "bcid/boundary_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "bcid/errors.hpp"

namespace bcid {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& tok, const std::string& column, std::size_t row) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || !std::isfinite(v))
    throw IngestionError("non-finite or malformed value '" + tok + "' in column '" + column + "'", row);
  return v;
}

struct SegmentRecords {
  std::vector<std::pair<double, const BoundaryRecord*>> sorted;  // by first parameter
};

}  // namespace

BoundaryTable parse_boundary_data(const std::string& text, DomainShape shape) {
  const Domain domain(shape);
  BoundaryTable table;
  table.dim = domain.dim();
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw IngestionError("empty boundary data file", 0);
  const auto header = split(line);
  std::vector<std::string> required{"x", "y"};
  if (table.dim == 3) required.emplace_back("z");
  required.insert(required.end(), {"u", "q", "segment"});
  std::map<std::string, std::size_t> col;
  for (std::size_t k = 0; k < header.size(); ++k) col[header[k]] = k;
  for (const auto& name : required)
    if (!col.count(name)) throw IngestionError("missing column '" + name + "'", 0);

  std::map<std::vector<long long>, std::size_t> seen;  // quantized coordinates -> record index
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split(line);
    auto cell = [&](const std::string& name) -> const std::string& {
      const std::size_t k = col.at(name);
      if (k >= cells.size()) throw IngestionError("missing value for column '" + name + "'", row);
      return cells[k];
    };
    BoundaryRecord r;
    r.row = row;
    r.position = Point(table.dim);
    r.position(0) = parse_number(cell("x"), "x", row);
    r.position(1) = parse_number(cell("y"), "y", row);
    if (table.dim == 3) r.position(2) = parse_number(cell("z"), "z", row);
    r.u = parse_number(cell("u"), "u", row);
    r.q = parse_number(cell("q"), "q", row);
    const double seg = parse_number(cell("segment"), "segment", row);
    r.segment = static_cast<int>(seg);
    if (seg != r.segment || r.segment < 0 || static_cast<std::size_t>(r.segment) >= domain.segments().size())
      throw IngestionError("invalid segment id '" + cell("segment") + "'", row);
    if (domain.segments()[static_cast<std::size_t>(r.segment)].distance(r.position) > 1e-6)
      throw IngestionError("point does not lie on segment " + std::to_string(r.segment), row);

    std::vector<long long> key;
    for (int a = 0; a < table.dim; ++a) key.push_back(std::llround(r.position(a) * 1e10));
    auto it = seen.find(key);
    if (it != seen.end()) {
      table.records[it->second] = r;
      ++table.duplicates;
    } else {
      seen[key] = table.records.size();
      table.records.push_back(r);
    }
  }

  // coverage: every segment must be sampled without gaps wider than one spacing
  for (const auto& seg : domain.segments()) {
    std::vector<const BoundaryRecord*> recs;
    for (const auto& r : table.records)
      if (r.segment == seg.id) recs.push_back(&r);
    if (recs.empty())
      throw IngestionError("boundary coverage gap: no records on segment " + std::to_string(seg.id), 0);
    if (table.dim == 2) {
      std::sort(recs.begin(), recs.end(), [&](auto* a, auto* b) {
        return seg.parameters(a->position)(0) < seg.parameters(b->position)(0);
      });
      const double spacing = seg.measure / static_cast<double>(recs.size());
      double prev = 0.0;
      for (const auto* r : recs) {
        const double t = seg.parameters(r->position)(0) * seg.measure;
        if (t - prev > 2.0 * spacing + 1e-12)
          throw IngestionError("boundary coverage gap before this point on segment " + std::to_string(seg.id), r->row);
        prev = t;
      }
      if (seg.measure - prev > 2.0 * spacing + 1e-12)
        throw IngestionError("boundary coverage gap at the end of segment " + std::to_string(seg.id), recs.back()->row);
    } else {
      // every cell of a sqrt(n) x sqrt(n) partition of the face must hold a record
      const int m = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(recs.size())) / 2.0)));
      std::vector<bool> hit(static_cast<std::size_t>(m * m), false);
      for (const auto* r : recs) {
        const Vector t = seg.parameters(r->position);
        const int i = std::clamp(static_cast<int>(t(0) * m), 0, m - 1);
        const int j = std::clamp(static_cast<int>(t(1) * m), 0, m - 1);
        hit[static_cast<std::size_t>(i * m + j)] = true;
      }
      if (std::find(hit.begin(), hit.end(), false) != hit.end())
        throw IngestionError("boundary coverage gap on face " + std::to_string(seg.id), 0);
    }
  }
  return table;
}

BoundaryTable ingest_boundary_data(const std::string& path, DomainShape shape) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open boundary data file '" + path + "'", 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_boundary_data(ss.str(), shape);
}

BoundaryValues bind_table(const BoundaryTable& table, DomainShape shape) {
  auto domain = std::make_shared<Domain>(shape);
  auto data = std::make_shared<BoundaryTable>(table);
  auto per_segment = std::make_shared<std::vector<SegmentRecords>>(domain->segments().size());
  for (const auto& r : data->records) {
    const auto& seg = domain->segments()[static_cast<std::size_t>(r.segment)];
    (*per_segment)[static_cast<std::size_t>(r.segment)].sorted.emplace_back(seg.parameters(r.position)(0), &r);
  }
  for (auto& s : *per_segment)
    std::sort(s.sorted.begin(), s.sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  auto lookup = [domain, data, per_segment](const BoundaryNode& node, bool want_u) -> std::optional<double> {
    auto value = [want_u](const BoundaryRecord* r) { return want_u ? r->u : r->q; };
    if (data->dim == 3) {
      const BoundaryRecord* best = nullptr;
      double dbest = INFINITY;
      for (const auto& r : data->records) {
        if (r.segment != node.segment_id) continue;
        const double d = (r.position - node.position).squaredNorm();
        if (d < dbest) {
          dbest = d;
          best = &r;
        }
      }
      if (!best) return std::nullopt;
      return value(best);
    }
    const auto& s = (*per_segment).at(static_cast<std::size_t>(node.segment_id)).sorted;
    if (s.empty()) return std::nullopt;
    const double t = domain->segments()[static_cast<std::size_t>(node.segment_id)].parameters(node.position)(0);
    auto hi = std::lower_bound(s.begin(), s.end(), t, [](const auto& e, double v) { return e.first < v; });
    if (hi == s.begin()) return value(s.front().second);
    if (hi == s.end()) return value(s.back().second);
    auto lo = std::prev(hi);
    const double span = hi->first - lo->first;
    const double w = span > 0.0 ? (t - lo->first) / span : 0.0;
    return (1.0 - w) * value(lo->second) + w * value(hi->second);
  };
  BoundaryValues bv;
  bv.dirichlet = [lookup](const BoundaryNode& n) { return lookup(n, true); };
  bv.neumann = [lookup](const BoundaryNode& n) { return lookup(n, false); };
  return bv;
}

}  // namespace bcid
