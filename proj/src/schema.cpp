#include "fairrepair/schema.hpp"

#include "fairrepair/errors.hpp"
#include "fairrepair/rng.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace fairrepair {

AttributeSchema::AttributeSchema(std::vector<Attribute> attributes, bool minmax_scaling)
    : attributes_(std::move(attributes)), minmax_scaling_(minmax_scaling) {
  for (std::size_t j = 0; j < attributes_.size(); ++j) {
    const auto& a = attributes_[j];
    if (!(a.lo <= a.hi) || !std::isfinite(a.lo) || !std::isfinite(a.hi)) {
      throw ConfigError("attribute '" + a.name + "': need finite lo <= hi");
    }
    if (!(a.epsilon >= 0.0)) throw ConfigError("attribute '" + a.name + "': epsilon must be >= 0");
    if (a.type == ValueType::integer && (a.lo != std::floor(a.lo) || a.hi != std::floor(a.hi))) {
      throw ConfigError("attribute '" + a.name + "': integer domain needs integer endpoints");
    }
    (a.kind == AttributeKind::sensitive ? protected_ : nonsensitive_).push_back(j);
  }
  if (protected_.empty()) throw ConfigError("schema needs at least one protected attribute");
}

bool AttributeSchema::contains(const Vector& x, double tol) const {
  if (static_cast<std::size_t>(x.size()) != attributes_.size()) return false;
  for (std::size_t j = 0; j < attributes_.size(); ++j) {
    if (x(j) < attributes_[j].lo - tol || x(j) > attributes_[j].hi + tol) return false;
  }
  return true;
}

AttributeSchema AttributeSchema::with_epsilons(const std::vector<double>& eps) const {
  if (eps.size() != attributes_.size()) throw InputError("epsilon vector has wrong length");
  auto attrs = attributes_;
  for (std::size_t j = 0; j < attrs.size(); ++j) {
    if (attrs[j].kind == AttributeKind::nonsensitive) attrs[j].epsilon = eps[j];
  }
  return AttributeSchema(std::move(attrs), minmax_scaling_);
}

Box::Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) throw InputError("box bounds have different lengths");
  for (Eigen::Index j = 0; j < lower.size(); ++j) {
    if (!(lower(j) <= upper(j))) throw InputError("box lower bound exceeds upper bound");
  }
}

bool Box::contains(const Vector& x, double tol) const {
  if (x.size() != lower.size()) return false;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x(j) < lower(j) - tol || x(j) > upper(j) + tol) return false;
  }
  return true;
}

bool Box::contains(const Box& other) const {
  return other.dim() == dim() && (other.lower.array() >= lower.array()).all() &&
         (other.upper.array() <= upper.array()).all();
}

Box neighborhood(const AttributeSchema& schema, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != schema.size()) {
    throw InputError("input has " + std::to_string(x.size()) + " attributes, schema has " +
                     std::to_string(schema.size()));
  }
  if (!schema.contains(x)) throw InputError("input lies outside the schema domain");
  Vector lo(x.size()), hi(x.size());
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto& a = schema[j];
    if (a.kind == AttributeKind::sensitive) {
      lo(j) = a.lo;
      hi(j) = a.hi;
    } else {
      lo(j) = std::max(a.lo, x(j) - a.epsilon);
      hi(j) = std::min(a.hi, x(j) + a.epsilon);
    }
  }
  return Box(std::move(lo), std::move(hi));
}

std::optional<std::vector<std::vector<double>>> neighborhood_grid(const AttributeSchema& schema,
                                                                  const Vector& x) {
  const Box box = neighborhood(schema, x);
  std::vector<std::vector<double>> axes(schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const double lo = box.lower(j);
    const double hi = box.upper(j);
    if (lo == hi) {
      axes[j] = {lo};
    } else if (schema[j].type == ValueType::integer) {
      for (double v = std::ceil(lo); v <= hi; v += 1.0) axes[j].push_back(v);
      // A non-integer x_j with epsilon < 1 can leave the window without
      // integers; the attribute value itself is still in the neighbourhood.
      if (axes[j].empty()) axes[j] = {x(j)};
    } else {
      return std::nullopt;
    }
  }
  return axes;
}

std::optional<std::vector<Vector>> enumerate_neighborhood(const AttributeSchema& schema,
                                                          const Vector& x, std::size_t cap) {
  auto axes = neighborhood_grid(schema, x);
  if (!axes) return std::nullopt;
  std::size_t count = 1;
  for (const auto& axis : *axes) {
    if (count > cap / axis.size()) return std::nullopt;
    count *= axis.size();
  }
  std::vector<Vector> points;
  points.reserve(count);
  std::vector<std::size_t> pos(axes->size(), 0);
  for (std::size_t n = 0; n < count; ++n) {
    Vector p(x.size());
    for (std::size_t j = 0; j < axes->size(); ++j) p(j) = (*axes)[j][pos[j]];
    points.push_back(std::move(p));
    for (std::size_t j = axes->size(); j-- > 0;) {
      if (++pos[j] < (*axes)[j].size()) break;
      pos[j] = 0;
    }
  }
  return points;
}

// Schema format:
//   version,1
//   scaling,none|minmax
//   name,protected|nonsensitive,lo,hi,integer|continuous,epsilon
std::string schema_to_text(const AttributeSchema& schema) {
  std::ostringstream out;
  out << "# fairrepair schema: name,kind,lo,hi,type,epsilon\n";
  out << "version,1\n";
  out << "scaling," << (schema.minmax_scaling() ? "minmax" : "none") << '\n';
  for (const auto& a : schema.attributes()) {
    out << a.name << ',' << (a.kind == AttributeKind::sensitive ? "protected" : "nonsensitive")
        << ',' << detail::format_real(a.lo) << ',' << detail::format_real(a.hi) << ','
        << (a.type == ValueType::integer ? "integer" : "continuous") << ','
        << detail::format_real(a.epsilon) << '\n';
  }
  return out.str();
}

AttributeSchema schema_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_version = false;
  bool minmax = false;
  std::vector<Attribute> attrs;
  auto fail = [&](const std::string& msg) {
    return ParseError("schema line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto fields = detail::split_char(body, ',');
    if (fields[0] == "version") {
      if (fields.size() != 2 || fields[1] != "1") throw fail("unsupported version");
      have_version = true;
      continue;
    }
    if (fields[0] == "scaling") {
      if (fields.size() != 2 || (fields[1] != "none" && fields[1] != "minmax")) {
        throw fail("scaling must be 'none' or 'minmax'");
      }
      minmax = fields[1] == "minmax";
      continue;
    }
    if (fields.size() != 6) throw fail("expected 6 fields, found " + std::to_string(fields.size()));
    Attribute a;
    a.name = std::string(fields[0]);
    if (a.name.empty() || a.name == "label") throw fail("invalid attribute name");
    if (fields[1] == "protected") {
      a.kind = AttributeKind::sensitive;
    } else if (fields[1] == "nonsensitive") {
      a.kind = AttributeKind::nonsensitive;
    } else {
      throw fail("field 2 must be 'protected' or 'nonsensitive'");
    }
    auto lo = detail::parse_real(fields[2]);
    auto hi = detail::parse_real(fields[3]);
    auto eps = detail::parse_real(fields[5]);
    if (!lo) throw fail("field 3 (lo) is not a real");
    if (!hi) throw fail("field 4 (hi) is not a real");
    if (!eps) throw fail("field 6 (epsilon) is not a real");
    a.lo = *lo;
    a.hi = *hi;
    a.epsilon = *eps;
    if (fields[4] == "integer") {
      a.type = ValueType::integer;
    } else if (fields[4] == "continuous") {
      a.type = ValueType::continuous;
    } else {
      throw fail("field 5 must be 'integer' or 'continuous'");
    }
    attrs.push_back(std::move(a));
  }
  if (!have_version) throw ParseError("schema: missing 'version' line");
  try {
    return AttributeSchema(std::move(attrs), minmax);
  } catch (const ConfigError& e) {
    throw ParseError(std::string("schema: ") + e.what());
  }
}

AttributeSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open schema file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return schema_from_text(buf.str());
}

void save_schema(const AttributeSchema& schema, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write schema file " + path.string());
  out << schema_to_text(schema);
}

Dataset dataset_from_csv(const std::string& csv, const AttributeSchema& schema) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("dataset: empty file");
  auto header = detail::split_char(detail::trim(line), ',');
  if (header.size() != schema.size() + 1) {
    throw ParseError("dataset header has " + std::to_string(header.size()) +
                     " columns, expected " + std::to_string(schema.size() + 1));
  }
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (header[j] != schema[j].name) {
      throw ParseError("dataset header column " + std::to_string(j + 1) + " is '" +
                       std::string(header[j]) + "', schema expects '" + schema[j].name + "'");
    }
  }
  if (header.back() != "label") throw ParseError("dataset header must end with 'label'");

  Dataset data{schema, {}};
  std::size_t row = 0;
  while (std::getline(in, line)) {
    auto body = detail::trim(line);
    if (body.empty()) continue;
    ++row;
    auto fields = detail::split_char(body, ',');
    const std::string where = "dataset row " + std::to_string(row);
    if (fields.size() != schema.size() + 1) {
      throw ParseError(where + ": expected " + std::to_string(schema.size() + 1) + " fields");
    }
    Sample s;
    s.x.resize(static_cast<Eigen::Index>(schema.size()));
    for (std::size_t j = 0; j < schema.size(); ++j) {
      auto v = detail::parse_real(fields[j]);
      if (!v) throw ParseError(where + ": column '" + schema[j].name + "' is not a real");
      if (*v < schema[j].lo || *v > schema[j].hi) {
        throw ParseError(where + ": column '" + schema[j].name + "' value out of domain");
      }
      if (schema[j].type == ValueType::integer && *v != std::floor(*v)) {
        throw ParseError(where + ": column '" + schema[j].name + "' must be an integer");
      }
      s.x(j) = *v;
    }
    if (fields.back() == "0") {
      s.label = 0;
    } else if (fields.back() == "1") {
      s.label = 1;
    } else {
      throw ParseError(where + ": label must be 0 or 1");
    }
    data.rows.push_back(std::move(s));
  }
  return data;
}

std::string dataset_to_csv(const Dataset& data) {
  std::ostringstream out;
  for (const auto& a : data.schema.attributes()) out << a.name << ',';
  out << "label\n";
  for (const auto& s : data.rows) {
    for (Eigen::Index j = 0; j < s.x.size(); ++j) out << detail::format_real(s.x(j)) << ',';
    out << s.label << '\n';
  }
  return out.str();
}

Dataset load_dataset(const std::filesystem::path& csv_path,
                     const std::filesystem::path& schema_path) {
  auto schema = load_schema(schema_path);
  std::ifstream in(csv_path);
  if (!in) throw InputError("cannot open dataset " + csv_path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return dataset_from_csv(buf.str(), schema);
}

void save_dataset(const Dataset& data, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw InputError("cannot write dataset " + csv_path.string());
  out << dataset_to_csv(data);
}

RepairSplit split_repair_sets(const Dataset& data, std::size_t n_repair, std::size_t n_calib,
                              std::uint64_t seed) {
  if (n_repair + n_calib > data.size()) {
    throw InputError("dataset has " + std::to_string(data.size()) + " rows, need " +
                     std::to_string(n_repair + n_calib) + " for repair and calibration sets");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  RepairSplit split{{data.schema, {}}, {data.schema, {}}, {data.schema, {}}};
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& row = data.rows[order[k]];
    if (k < n_repair) {
      split.repair.rows.push_back(row);
    } else if (k < n_repair + n_calib) {
      split.calibration.rows.push_back(row);
    } else {
      split.test.rows.push_back(row);
    }
  }
  return split;
}

std::vector<Vector> inputs_of(const Dataset& data) {
  std::vector<Vector> xs;
  xs.reserve(data.size());
  for (const auto& s : data.rows) xs.push_back(s.x);
  return xs;
}

}  // namespace fairrepair
