#include "strongorbit/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

#include "strongorbit/errors.hpp"
#include "strongorbit/io.hpp"

namespace strongorbit {

using nlohmann::json;

namespace {

class BlockParser {
 public:
  explicit BlockParser(const std::string& text) : s_(text) {}

  json document() {
    json obj = json::object();
    entries(obj, false);
    return obj;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("config line " + std::to_string(line_) + ": " + what);
  }

  void skip() {
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c)) || c == ';') {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  bool at_end() {
    skip();
    return pos_ >= s_.size();
  }

  char peek() {
    skip();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string ident() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    if (pos_ == start) fail("expected a name");
    if (std::isdigit(static_cast<unsigned char>(s_[start]))) fail("names cannot start with a digit");
    return s_.substr(start, pos_ - start);
  }

  void entries(json& obj, bool nested) {
    while (true) {
      if (at_end()) {
        if (nested) fail("unterminated block");
        return;
      }
      if (peek() == '}') {
        if (!nested) fail("unexpected '}'");
        ++pos_;
        return;
      }
      const std::string key = ident();
      if (obj.contains(key)) fail("duplicate key '" + key + "'");
      const char c = peek();
      if (c == '{') {
        ++pos_;
        json child = json::object();
        entries(child, true);
        obj[key] = std::move(child);
      } else if (c == '=') {
        ++pos_;
        obj[key] = value();
      } else {
        fail("expected '=' or '{' after '" + key + "'");
      }
    }
  }

  json value() {
    const char c = peek();
    if (c == '[') {
      ++pos_;
      json arr = json::array();
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      while (true) {
        arr.push_back(value());
        const char d = peek();
        if (d == ',') {
          ++pos_;
        } else if (d == ']') {
          ++pos_;
          return arr;
        } else {
          fail("expected ',' or ']'");
        }
      }
    }
    if (c == '"') {
      ++pos_;
      std::string out;
      while (pos_ < s_.size() && s_[pos_] != '"') {
        if (s_[pos_] == '\n') fail("newline in string");
        if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
        out += s_[pos_++];
      }
      if (pos_ >= s_.size()) fail("unterminated string");
      ++pos_;
      return out;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::string word = ident();
      if (word == "true") return true;
      if (word == "false") return false;
      fail("unexpected word '" + word + "'");
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                s_[pos_] == '-' || s_[pos_] == '+'))
      ++pos_;
    const std::string tok = s_.substr(start, pos_ - start);
    if (tok.empty()) fail("expected a value");
    const bool integral = tok.find_first_of(".eE") == std::string::npos;
    try {
      std::size_t used = 0;
      if (integral && tok[0] != '-') {
        const unsigned long long v = std::stoull(tok, &used);
        if (used == tok.size()) return v;
      } else if (integral) {
        const long long v = std::stoll(tok, &used);
        if (used == tok.size()) return v;
      }
      const double v = std::stod(tok, &used);
      if (used == tok.size()) return v;
    } catch (const std::exception&) {
    }
    fail("bad number '" + tok + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

void check_keys(const json& block, const char* name, std::initializer_list<const char*> allowed) {
  if (!block.is_object()) throw ValidationError(std::string(name) + " must be a block");
  for (const auto& [key, _] : block.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError(std::string(name) + " block: unknown key '" + key + "'");
  }
}

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

std::string number_text(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

void emit_value(std::string& out, const json& v) {
  if (v.is_array()) {
    out += '[';
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (k) out += ", ";
      emit_value(out, v[k]);
    }
    out += ']';
  } else if (v.is_boolean()) {
    out += v.get<bool>() ? "true" : "false";
  } else if (v.is_number_unsigned()) {
    out += std::to_string(v.get<std::uint64_t>());
  } else if (v.is_number_integer()) {
    out += std::to_string(v.get<std::int64_t>());
  } else if (v.is_number()) {
    out += number_text(v.get<double>());
  } else if (v.is_string()) {
    out += '"';
    for (char c : v.get<std::string>()) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    out += '"';
  } else {
    throw ValidationError("cannot serialize value in block grammar");
  }
}

void emit_block(std::string& out, const json& obj, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  for (const auto& [key, v] : obj.items()) {
    if (v.is_object()) {
      out += pad + key + " {\n";
      emit_block(out, v, depth + 1);
      out += pad + "}\n";
    } else {
      out += pad + key + " = ";
      emit_value(out, v);
      out += '\n';
    }
  }
}

}  // namespace

json parse_block_document(const std::string& text) { return BlockParser(text).document(); }

BodySystem RunConfig::system() const {
  try {
    return BodySystem(masses, dim, alpha, energy);
  } catch (const DomainError& e) {
    throw ValidationError(e.what());
  }
}

SolveConfig RunConfig::solve_config() const {
  SolveConfig c = solver;
  c.harmonics = harmonics;
  return c;
}

void RunConfig::validate() const {
  const BodySystem sys = system();
  if (harmonics < 1) throw ValidationError("discretization: harmonics must be >= 1");
  if (nodes != 0) {
    if (nodes % 2 != 0 || nodes < 4) throw ValidationError("discretization: nodes must be even and >= 4");
    if (nodes < 4 * (2 * harmonics - 1)) throw ValidationError("discretization: nodes must be >= 4 (2K - 1)");
  }
  if (samples < 4 || samples % 2 != 0) throw ValidationError("discretization: samples must be even and >= 4");
  if (crosscheck_steps != 0 && crosscheck_steps < 1000)
    throw ValidationError("discretization: crosscheck_steps must be 0 or >= 1000");
  solve_config().validate(sys);
  if (continuation) continuation->validate();
  for (const auto& f : formats)
    if (f != "json" && f != "csv") throw ValidationError("output: unknown format '" + f + "'");
}

bool RunConfig::operator==(const RunConfig& o) const { return to_json(*this) == to_json(o); }

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be an object");
  check_keys(j, "top level", {"system", "discretization", "solver", "continuation", "output"});
  if (!j.contains("system")) throw ValidationError("config needs a system block");
  RunConfig c;

  const json& s = j.at("system");
  check_keys(s, "system", {"masses", "dim", "alpha", "energy"});
  if (!s.contains("masses")) throw ValidationError("system block needs masses");
  c.masses = field(s, "masses", c.masses);
  c.dim = field(s, "dim", c.dim);
  c.alpha = field(s, "alpha", c.alpha);
  c.energy = field(s, "energy", c.energy);

  if (j.contains("discretization")) {
    const json& d = j.at("discretization");
    check_keys(d, "discretization", {"harmonics", "nodes", "samples", "crosscheck_steps"});
    c.harmonics = field(d, "harmonics", c.harmonics);
    c.nodes = field(d, "nodes", c.nodes);
    c.samples = field(d, "samples", c.samples);
    c.crosscheck_steps = field(d, "crosscheck_steps", c.crosscheck_steps);
  }
  if (j.contains("solver")) {
    if (!j.at("solver").is_object()) throw ValidationError("solver must be a block");
    try {
      c.solver = solve_config_from_json(j.at("solver"), c.solver);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("solver block: ") + e.what());
    }
  }
  if (j.contains("continuation")) {
    const json& k = j.at("continuation");
    check_keys(k, "continuation", {"radii", "d1", "d2", "cold_start"});
    ContinuationSchedule sched;
    sched.radii = field(k, "radii", sched.radii);
    sched.d1 = field(k, "d1", sched.d1);
    sched.d2 = field(k, "d2", sched.d2);
    c.cold_start = field(k, "cold_start", c.cold_start);
    c.continuation = sched;
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    check_keys(o, "output", {"directory", "formats"});
    c.directory = field(o, "directory", c.directory);
    c.formats = field(o, "formats", c.formats);
  }
  c.validate();
  return c;
}

RunConfig parse_run_config(const std::string& text) {
  std::size_t k = 0;
  while (k < text.size()) {
    if (std::isspace(static_cast<unsigned char>(text[k]))) {
      ++k;
    } else if (text[k] == '#') {
      while (k < text.size() && text[k] != '\n') ++k;
    } else {
      break;
    }
  }
  if (k < text.size() && text[k] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("config JSON: ") + e.what());
    }
    return run_config_from_json(j);
  }
  return run_config_from_json(parse_block_document(text));
}

json to_json(const RunConfig& c) {
  json j;
  j["system"] = {{"masses", c.masses}, {"dim", c.dim}, {"alpha", c.alpha}, {"energy", c.energy}};
  j["discretization"] = {{"harmonics", c.harmonics},
                         {"nodes", c.nodes},
                         {"samples", c.samples},
                         {"crosscheck_steps", c.crosscheck_steps}};
  j["solver"] = to_json(c.solver);
  if (c.continuation)
    j["continuation"] = {{"radii", c.continuation->radii},
                         {"d1", c.continuation->d1},
                         {"d2", c.continuation->d2},
                         {"cold_start", c.cold_start}};
  j["output"] = {{"directory", c.directory}, {"formats", c.formats}};
  return j;
}

std::string serialize_run_config(const RunConfig& c) {
  std::string out;
  const json j = to_json(c);
  for (const char* block : {"system", "discretization", "solver", "continuation", "output"}) {
    if (!j.contains(block)) continue;
    json single = json::object();
    single[block] = j.at(block);
    emit_block(out, single, 0);
  }
  return out;
}

}  // namespace strongorbit
