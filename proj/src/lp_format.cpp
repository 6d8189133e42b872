#include "fairrepair/lp_format.hpp"

#include "fairrepair/errors.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <fstream>
#include <map>
#include <sstream>

namespace fairrepair {

namespace {

std::string number(double v) { return detail::format_real17(v); }

void write_terms(std::ostringstream& out, const MilpProblem& p, const std::vector<Term>& terms) {
  if (terms.empty()) {
    out << " 0 " << p.variable(0).name;
    return;
  }
  std::size_t col = 0;
  for (const auto& t : terms) {
    out << (t.coeff < 0 ? " - " : " + ") << number(std::abs(t.coeff)) << ' '
        << p.variable(t.var).name;
    if (++col % 6 == 0) out << "\n   ";
  }
}

std::string lower_case(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string lp_to_text(const MilpProblem& problem) {
  if (problem.num_variables() == 0) throw StructureError("cannot export a problem without variables");
  std::ostringstream out;
  out << "\\ fairrepair MILP export\n";
  out << "Minimize\n obj:";
  write_terms(out, problem, problem.objective());
  out << "\nSubject To\n";
  for (std::size_t i = 0; i < problem.num_constraints(); ++i) {
    const auto& c = problem.constraints()[i];
    out << ' ' << (c.name.empty() ? "c" + std::to_string(i) : c.name) << ':';
    write_terms(out, problem, c.terms);
    out << (c.sense == Sense::le ? " <= " : c.sense == Sense::ge ? " >= " : " = ")
        << number(c.rhs) << '\n';
  }
  out << "Bounds\n";
  for (const auto& v : problem.variables()) {
    if (v.type == VarType::binary && v.lower == 0.0 && v.upper == 1.0) continue;
    const bool lo = std::isfinite(v.lower), hi = std::isfinite(v.upper);
    if (!lo && !hi) {
      out << ' ' << v.name << " free\n";
    } else if (lo && hi && v.lower == v.upper) {
      out << ' ' << v.name << " = " << number(v.lower) << '\n';
    } else if (lo && hi) {
      out << ' ' << number(v.lower) << " <= " << v.name << " <= " << number(v.upper) << '\n';
    } else if (lo) {
      if (v.lower != 0.0) out << ' ' << v.name << " >= " << number(v.lower) << '\n';
    } else {
      out << " -inf <= " << v.name << " <= " << number(v.upper) << '\n';
    }
  }
  bool any_binary = false;
  for (const auto& v : problem.variables()) {
    if (v.type != VarType::binary) continue;
    if (!any_binary) out << "Binaries\n";
    any_binary = true;
    out << ' ' << v.name << '\n';
  }
  out << "End\n";
  return out.str();
}

void export_lp_file(const MilpProblem& problem, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write LP file " + path.string());
  out << lp_to_text(problem);
  if (!out) throw InputError("failed writing LP file " + path.string());
}

namespace {

enum class Section { none, objective, constraints, bounds, binaries, generals, end };

struct Token {
  std::string text;
  int line;
};

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> tokens;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto c = line.find('\\'); c != std::string::npos) line.resize(c);
    std::size_t i = 0;
    while (i < line.size()) {
      const char ch = line[i];
      if (std::isspace(static_cast<unsigned char>(ch))) {
        ++i;
      } else if (ch == '<' || ch == '>' || ch == '=') {
        std::size_t j = i + 1;
        if (j < line.size() && (line[j] == '=' || line[j] == '<' || line[j] == '>')) ++j;
        tokens.push_back({line.substr(i, j - i), line_no});
        i = j;
      } else if (ch == '+' || ch == '-' || ch == ':') {
        tokens.push_back({std::string(1, ch), line_no});
        ++i;
      } else {
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])) &&
               line[j] != '<' && line[j] != '>' && line[j] != '=' && line[j] != ':' &&
               !((line[j] == '+' || line[j] == '-') && j > i &&
                 !(line[j - 1] == 'e' || line[j - 1] == 'E'))) {
          ++j;
        }
        tokens.push_back({line.substr(i, j - i), line_no});
        i = j;
      }
    }
  }
  return tokens;
}

class LpReader {
 public:
  explicit LpReader(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  MilpProblem read() {
    Section section = Section::none;
    bool maximize = false;
    std::vector<std::pair<std::string, double>> objective;
    while (pos_ < tokens_.size()) {
      if (auto s = section_keyword(); s) {
        if (*s == Section::objective) maximize = last_was_max_;
        section = *s;
        if (section == Section::end) break;
        continue;
      }
      switch (section) {
        case Section::objective: {
          skip_label();
          auto terms = read_expression();
          objective.insert(objective.end(), terms.begin(), terms.end());
          break;
        }
        case Section::constraints: read_constraint(); break;
        case Section::bounds: read_bound(); break;
        case Section::binaries: binaries_.push_back(take().text); touch(binaries_.back()); break;
        case Section::generals: throw error("general integer variables are not supported");
        default: throw error("content outside a section");
      }
    }

    MilpProblem p;
    for (const auto& name : order_) {
      auto [lo, hi] = bounds_.count(name) ? bounds_[name] : std::pair{0.0, kInf};
      const bool is_bin = std::find(binaries_.begin(), binaries_.end(), name) != binaries_.end();
      if (is_bin) {
        if (!bounds_.count(name)) {
          lo = 0.0;
          hi = 1.0;
        }
        p.add_variable(name, VarType::binary, std::max(lo, 0.0), std::min(hi, 1.0));
      } else {
        p.add_variable(name, VarType::continuous, lo, hi);
      }
    }
    std::vector<Term> obj;
    for (const auto& [name, c] : objective) obj.push_back({*p.find(name), maximize ? -c : c});
    p.set_objective(std::move(obj));
    for (auto& c : raw_constraints_) {
      std::vector<Term> terms;
      for (const auto& [name, coeff] : c.terms) terms.push_back({*p.find(name), coeff});
      p.add_constraint(c.name, std::move(terms), c.sense, c.rhs);
    }
    return p;
  }

 private:
  struct RawConstraint {
    std::string name;
    std::vector<std::pair<std::string, double>> terms;
    Sense sense;
    double rhs;
  };

  ParseError error(const std::string& msg) const {
    const int line = pos_ < tokens_.size() ? tokens_[pos_].line : tokens_.empty() ? 0 : tokens_.back().line;
    return ParseError("LP line " + std::to_string(line) + ": " + msg);
  }

  const Token& peek(std::size_t ahead = 0) const {
    static const Token eof{"", 0};
    return pos_ + ahead < tokens_.size() ? tokens_[pos_ + ahead] : eof;
  }
  const Token& take() {
    if (pos_ >= tokens_.size()) throw error("unexpected end of file");
    return tokens_[pos_++];
  }

  std::optional<Section> section_keyword() {
    const auto w = lower_case(peek().text);
    const auto w2 = lower_case(peek(1).text);
    if (w == "minimize" || w == "minimise" || w == "min" || w == "maximize" || w == "maximise" ||
        w == "max") {
      if (peek(1).text == ":") return std::nullopt;
      last_was_max_ = w.rfind("max", 0) == 0;
      ++pos_;
      return Section::objective;
    }
    if ((w == "subject" && w2 == "to") || (w == "such" && w2 == "that")) {
      pos_ += 2;
      return Section::constraints;
    }
    if (w == "st" || w == "s.t." || w == "st.") {
      ++pos_;
      return Section::constraints;
    }
    if (w == "bounds" || w == "bound") {
      ++pos_;
      return Section::bounds;
    }
    if (w == "binaries" || w == "binary" || w == "bin") {
      ++pos_;
      return Section::binaries;
    }
    if (w == "generals" || w == "general" || w == "gen") {
      ++pos_;
      return Section::generals;
    }
    if (w == "end") {
      ++pos_;
      return Section::end;
    }
    return std::nullopt;
  }

  void touch(const std::string& name) {
    if (!seen_.count(name)) {
      seen_.insert({name, true});
      order_.push_back(name);
    }
  }

  bool is_sense(const std::string& t) const {
    return t == "<=" || t == ">=" || t == "=" || t == "<" || t == ">" || t == "=<" || t == "=>";
  }

  static std::optional<double> as_number(const std::string& t) {
    const auto lt = lower_case(t);
    if (lt == "inf" || lt == "infinity") return kInf;
    return detail::parse_real(t);
  }

  void skip_label() {
    if (peek(1).text == ":") pos_ += 2;
  }

  bool at_expression_end() {
    if (pos_ >= tokens_.size()) return true;
    const auto& t = peek().text;
    if (is_sense(t)) return true;
    if (peek(1).text == ":") return true;
    const auto save = pos_;
    const bool kw = section_keyword().has_value();
    pos_ = save;
    return kw;
  }

  std::vector<std::pair<std::string, double>> read_expression() {
    std::vector<std::pair<std::string, double>> terms;
    while (!at_expression_end()) {
      double sign = 1.0;
      while (peek().text == "+" || peek().text == "-") {
        if (take().text == "-") sign = -sign;
      }
      double coeff = 1.0;
      const auto& t = take();
      std::string name;
      if (auto v = as_number(t.text)) {
        coeff = *v;
        if (at_expression_end()) throw error("constant terms are not supported");
        name = take().text;
      } else {
        name = t.text;
      }
      touch(name);
      terms.emplace_back(name, sign * coeff);
    }
    return terms;
  }

  Sense read_sense() {
    const auto t = take().text;
    if (t == "<=" || t == "<" || t == "=<") return Sense::le;
    if (t == ">=" || t == ">" || t == "=>") return Sense::ge;
    if (t == "=") return Sense::eq;
    throw error("expected a comparison, found '" + t + "'");
  }

  double read_number() {
    double sign = 1.0;
    while (peek().text == "+" || peek().text == "-") {
      if (take().text == "-") sign = -sign;
    }
    const auto t = take().text;
    auto v = as_number(t);
    if (!v) throw error("expected a number, found '" + t + "'");
    return sign * *v;
  }

  void read_constraint() {
    RawConstraint c;
    if (peek(1).text == ":") {
      c.name = take().text;
      take();
    } else {
      c.name = "c" + std::to_string(raw_constraints_.size());
    }
    c.terms = read_expression();
    c.sense = read_sense();
    c.rhs = read_number();
    raw_constraints_.push_back(std::move(c));
  }

  void set_lower(const std::string& name, double v) {
    touch(name);
    bounds_.try_emplace(name, 0.0, kInf);
    bounds_[name].first = v;
  }
  void set_upper(const std::string& name, double v) {
    touch(name);
    bounds_.try_emplace(name, 0.0, kInf);
    bounds_[name].second = v;
  }

  void read_bound() {
    // Forms: x free | x = v | x >= v | x <= v | v <= x | v <= x <= w
    const auto& first = peek().text;
    const bool starts_with_number =
        as_number(first).has_value() || first == "-" || first == "+";
    if (!starts_with_number) {
      const std::string name = take().text;
      if (lower_case(peek().text) == "free") {
        ++pos_;
        set_lower(name, -kInf);
        set_upper(name, kInf);
        return;
      }
      const Sense s = read_sense();
      const double v = read_number();
      if (s == Sense::eq) {
        set_lower(name, v);
        set_upper(name, v);
      } else if (s == Sense::le) {
        set_upper(name, v);
      } else {
        set_lower(name, v);
      }
      return;
    }
    const double v = read_number();
    const Sense s = read_sense();
    const std::string name = take().text;
    if (s == Sense::le) {
      set_lower(name, v);
    } else if (s == Sense::ge) {
      set_upper(name, v);
    } else {
      set_lower(name, v);
      set_upper(name, v);
    }
    if (is_sense(peek().text)) {
      const Sense s2 = read_sense();
      const double w = read_number();
      if (s2 == Sense::le) {
        set_upper(name, w);
      } else {
        set_lower(name, w);
      }
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  bool last_was_max_ = false;
  std::vector<std::string> order_;
  std::map<std::string, bool> seen_;
  std::map<std::string, std::pair<double, double>> bounds_;
  std::vector<std::string> binaries_;
  std::vector<RawConstraint> raw_constraints_;
};

}  // namespace

MilpProblem lp_from_text(const std::string& text) { return LpReader(tokenize(text)).read(); }

MilpProblem read_lp_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open LP file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return lp_from_text(buf.str());
}

}  // namespace fairrepair
