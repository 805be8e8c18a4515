#include "hpe/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>

#include "hpe/error.hpp"

namespace hpe::config {
namespace {

class TomlReader {
 public:
  explicit TomlReader(std::string_view text) : text_(text) {}

  nlohmann::json parse() {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        skip_inline_ws();
        auto path = read_key_path();
        skip_inline_ws();
        expect(']');
        table = &root;
        for (const auto& k : path) {
          auto& next = (*table)[k];
          if (next.is_null()) next = nlohmann::json::object();
          if (!next.is_object()) fail("key '" + k + "' is not a table");
          table = &next;
        }
      } else {
        auto path = read_key_path();
        skip_inline_ws();
        expect('=');
        skip_inline_ws();
        assign(*table, path, read_value());
      }
      end_of_line();
    }
    return root;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ValidationError("toml line " + std::to_string(line_) + ": " + msg);
  }
  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return eof() ? '\0' : text_[pos_]; }
  void advance() {
    if (peek() == '\n') ++line_;
    ++pos_;
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }
  void skip_inline_ws() {
    while (peek() == ' ' || peek() == '\t') advance();
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') advance();
  }
  // whitespace, newlines and comments
  void skip_all_ws() {
    while (true) {
      skip_inline_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        advance();
        continue;
      }
      break;
    }
  }
  void skip_blank_lines() { skip_all_ws(); }
  void end_of_line() {
    skip_inline_ws();
    skip_comment();
    if (peek() == '\r') advance();
    if (!eof() && peek() != '\n') fail("unexpected trailing characters");
  }

  static bool bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  std::vector<std::string> read_key_path() {
    std::vector<std::string> path;
    while (true) {
      skip_inline_ws();
      if (peek() == '"') {
        path.push_back(read_string());
      } else {
        std::string key;
        while (bare_key_char(peek())) {
          key += peek();
          advance();
        }
        if (key.empty()) fail("expected a key");
        path.push_back(key);
      }
      skip_inline_ws();
      if (peek() != '.') break;
      advance();
    }
    return path;
  }

  void assign(nlohmann::json& table, const std::vector<std::string>& path,
              nlohmann::json value) {
    nlohmann::json* t = &table;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      auto& next = (*t)[path[i]];
      if (next.is_null()) next = nlohmann::json::object();
      if (!next.is_object()) fail("key '" + path[i] + "' is not a table");
      t = &next;
    }
    if (t->contains(path.back())) fail("duplicate key '" + path.back() + "'");
    (*t)[path.back()] = std::move(value);
  }

  std::string read_string() {
    expect('"');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = peek();
      advance();
      if (c == '"') break;
      if (c == '\\') {
        char e = peek();
        advance();
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  nlohmann::json read_value() {
    const char c = peek();
    if (c == '"') return read_string();
    if (c == '[') return read_array();
    if (c == '{') return read_inline_table();
    std::string tok;
    while (!eof() && (bare_key_char(peek()) || peek() == '.' || peek() == '+')) {
      tok += peek();
      advance();
    }
    if (tok.empty()) fail("expected a value");
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string digits;
    for (char ch : tok)
      if (ch != '_') digits += ch;
    const bool is_float = digits.find_first_of(".eE") != std::string::npos &&
                          digits.rfind("0x", 0) != 0;
    try {
      std::size_t used = 0;
      if (is_float) {
        double v = std::stod(digits, &used);
        if (used == digits.size()) return v;
      } else {
        long long v = std::stoll(digits, &used);
        if (used == digits.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("invalid value '" + tok + "'");
  }

  nlohmann::json read_array() {
    expect('[');
    nlohmann::json arr = nlohmann::json::array();
    while (true) {
      skip_all_ws();
      if (peek() == ']') {
        advance();
        return arr;
      }
      arr.push_back(read_value());
      skip_all_ws();
      if (peek() == ',') {
        advance();
        continue;
      }
      skip_all_ws();
      expect(']');
      return arr;
    }
  }

  nlohmann::json read_inline_table() {
    expect('{');
    nlohmann::json obj = nlohmann::json::object();
    skip_inline_ws();
    if (peek() == '}') {
      advance();
      return obj;
    }
    while (true) {
      auto path = read_key_path();
      skip_inline_ws();
      expect('=');
      skip_inline_ws();
      assign(obj, path, read_value());
      skip_inline_ws();
      if (peek() == ',') {
        advance();
        skip_inline_ws();
        continue;
      }
      expect('}');
      return obj;
    }
  }
};

}  // namespace

nlohmann::json parse_toml(std::string_view text) { return TomlReader(text).parse(); }

nlohmann::json load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (path.extension() == ".json") {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
  }
  return parse_toml(text);
}

}  // namespace hpe::config
