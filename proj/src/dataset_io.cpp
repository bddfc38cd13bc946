#include "robcomp/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "robcomp/errors.hpp"
#include "robcomp/text.hpp"

namespace robcomp {

Space DatasetFile::space() const {
  for (const auto& g : groups) {
    if (!g.points.empty()) return Space::Plane;
  }
  return Space::Scalar;
}

bool DatasetFile::has_outer_ids() const {
  return std::any_of(groups.begin(), groups.end(), [](const GroupRecord& g) { return !g.outer.empty(); });
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool valid_id(std::string_view id) {
  if (id.empty()) return false;
  return std::none_of(id.begin(), id.end(),
                      [](char c) { return is_space(c) || c == ':' || c == '@' || c == '#' || c == ','; });
}

std::vector<std::string_view> split_tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace

DatasetFile parse_dataset(std::string_view text) {
  DatasetFile file;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t line_no = 0;
  bool planar = false, decided = false;
  std::size_t first_line = 0;

  while (!text.empty()) {
    ++line_no;
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw ParseError(line_no, "expected '<group-id>: values'");
    std::string_view head = trim(line.substr(0, colon));
    GroupRecord rec;
    if (const auto at = head.find('@'); at != std::string_view::npos) {
      rec.outer = std::string(head.substr(at + 1));
      head = head.substr(0, at);
      if (!valid_id(rec.outer)) throw ParseError(line_no, "bad outer-group id '" + rec.outer + "'");
    }
    rec.id = std::string(head);
    if (!valid_id(rec.id)) throw ParseError(line_no, "bad group id '" + rec.id + "'");
    if (!seen.emplace(rec.outer, rec.id).second) {
      throw ParseError(line_no, "duplicate group id '" + rec.id + "'");
    }

    const auto tokens = split_tokens(line.substr(colon + 1));
    if (tokens.empty()) throw ParseError(line_no, "group '" + rec.id + "' has no values");
    for (auto tok : tokens) {
      const auto comma = tok.find(',');
      const bool is_point = comma != std::string_view::npos;
      if (!decided) {
        planar = is_point;
        decided = true;
        first_line = line_no;
      } else if (planar != is_point) {
        throw ParseError(line_no, "mixes scalars and x,y points (line " + std::to_string(first_line) +
                                      " set the kind)");
      }
      if (is_point) {
        const auto x = parse_number(tok.substr(0, comma));
        const auto y = parse_number(tok.substr(comma + 1));
        if (!x || !y) throw ParseError(line_no, "bad point '" + std::string(tok) + "'");
        rec.points.push_back({*x, *y});
      } else {
        const auto v = parse_number(tok);
        if (!v) throw ParseError(line_no, "bad number '" + std::string(tok) + "'");
        rec.scalars.push_back(*v);
      }
    }
    file.groups.push_back(std::move(rec));
  }

  if (file.groups.empty()) throw ParseError(std::max<std::size_t>(line_no, 1), "dataset has no groups");
  if (file.has_outer_ids()) {
    for (const auto& g : file.groups) {
      if (g.outer.empty()) throw ParseError(line_no, "group '" + g.id + "' lacks an outer-group id");
    }
  }
  return file;
}

DatasetFile read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str());
}

std::string write_dataset(const DatasetFile& file) {
  std::string out;
  for (const auto& g : file.groups) {
    out += g.id;
    if (!g.outer.empty()) out += '@' + g.outer;
    out += ':';
    for (double v : g.scalars) out += ' ' + format_number(v);
    for (const auto& p : g.points) out += ' ' + format_number(p.x) + ',' + format_number(p.y);
    out += '\n';
  }
  return out;
}

namespace {

template <typename T>
const std::vector<T>& values_of(const GroupRecord& g) {
  if constexpr (std::is_same_v<T, double>) {
    return g.scalars;
  } else {
    return g.points;
  }
}

template <typename T>
HierarchicalDataset build(const DatasetFile& file, std::size_t depth) {
  std::vector<T> flat;
  GroupLayout layout;
  layout.depth = depth;
  if (depth == 3) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<const GroupRecord*>> by_outer;
    for (const auto& g : file.groups) {
      if (!by_outer.count(g.outer)) order.push_back(g.outer);
      by_outer[g.outer].push_back(&g);
    }
    for (const auto& o : order) {
      layout.outer_counts.push_back(by_outer[o].size());
      for (const auto* g : by_outer[o]) {
        const auto& v = values_of<T>(*g);
        layout.inner_sizes.push_back(v.size());
        flat.insert(flat.end(), v.begin(), v.end());
      }
    }
  } else {
    for (const auto& g : file.groups) {
      const auto& v = values_of<T>(g);
      if (depth == 2) layout.inner_sizes.push_back(v.size());
      flat.insert(flat.end(), v.begin(), v.end());
    }
  }
  if (depth == 1) return HierarchicalDataset::flat(Payload(std::move(flat)));
  return HierarchicalDataset::from_layout(Payload(std::move(flat)), std::move(layout));
}

}  // namespace

HierarchicalDataset to_hierarchical(const DatasetFile& file, std::size_t depth) {
  if (depth < 1 || depth > 3) throw ConfigError("dataset depth must be 1, 2 or 3");
  if (depth == 3 && !file.has_outer_ids()) {
    throw ConfigError("a three-level stack needs '<group>@<outer>:' ids on every line");
  }
  if (depth == 2 && file.has_outer_ids()) {
    throw ConfigError("dataset has outer-group ids but the stack has two levels");
  }
  return file.space() == Space::Plane ? build<Point2D>(file, depth) : build<double>(file, depth);
}

DatasetFile from_hierarchical(const HierarchicalDataset& data) {
  DatasetFile file;
  const GroupLayout& layout = data.layout();
  std::vector<std::size_t> sizes = layout.depth == 1 ? std::vector<std::size_t>{data.size()} : layout.inner_sizes;
  std::vector<std::string> outer(sizes.size());
  if (layout.depth == 3) {
    std::size_t g = 0;
    for (std::size_t j = 0; j < layout.outer_counts.size(); ++j) {
      for (std::size_t c = 0; c < layout.outer_counts[j]; ++c) outer[g++] = "o" + std::to_string(j);
    }
  }
  std::size_t offset = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    GroupRecord rec;
    rec.id = "g" + std::to_string(g);
    rec.outer = outer[g];
    std::visit(
        [&](const auto& v) {
          using T = typename std::decay_t<decltype(v)>::value_type;
          auto first = v.begin() + static_cast<std::ptrdiff_t>(offset);
          auto last = first + static_cast<std::ptrdiff_t>(sizes[g]);
          if constexpr (std::is_same_v<T, double>) {
            rec.scalars.assign(first, last);
          } else {
            rec.points.assign(first, last);
          }
        },
        data.payload());
    offset += sizes[g];
    file.groups.push_back(std::move(rec));
  }
  return file;
}

}  // namespace robcomp
