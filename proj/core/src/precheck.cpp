#include <cctype>
#include <regex>
#include <string>

#include "mev/text.hpp"
#include "mev/verify.hpp"

namespace mev {

namespace {

bool ident_start(char ch) { return std::isalpha(static_cast<unsigned char>(ch)) || ch == '_'; }
bool ident_char(char ch) {
  return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '$';
}

}  // namespace

PrecheckResult precheck(std::string_view code) {
  if (trim(code).empty()) return {false, "empty source"};

  long modules = 0;
  long endmodules = 0;
  long parens = 0;
  long blocks = 0;
  for (std::size_t i = 0; i < code.size();) {
    const char ch = code[i];
    if (ch == '/' && i + 1 < code.size() && code[i + 1] == '/') {
      while (i < code.size() && code[i] != '\n') ++i;
    } else if (ch == '/' && i + 1 < code.size() && code[i + 1] == '*') {
      const std::size_t close = code.find("*/", i + 2);
      if (close == std::string_view::npos) return {false, "unterminated block comment"};
      i = close + 2;
    } else if (ch == '"') {
      ++i;
      while (i < code.size() && code[i] != '"' && code[i] != '\n') i += code[i] == '\\' ? 2 : 1;
      if (i >= code.size() || code[i] != '"') return {false, "unterminated string literal"};
      ++i;
    } else if (ch == '\'' ) {
      // based literal: skip base letter and digits so 'b0 etc. never read as identifiers
      ++i;
      if (i < code.size() && (code[i] == 's' || code[i] == 'S')) ++i;
      if (i < code.size() && std::isalpha(static_cast<unsigned char>(code[i]))) ++i;
      while (i < code.size() && (std::isxdigit(static_cast<unsigned char>(code[i])) || code[i] == '_' ||
                                 code[i] == 'x' || code[i] == 'X' || code[i] == 'z' || code[i] == 'Z' ||
                                 code[i] == '?')) {
        ++i;
      }
    } else if (ch == '\\') {
      // escaped identifier runs to whitespace
      while (i < code.size() && !std::isspace(static_cast<unsigned char>(code[i]))) ++i;
    } else if (ident_start(ch) || ch == '$' || ch == '`') {
      const std::size_t start = i;
      ++i;
      while (i < code.size() && ident_char(code[i])) ++i;
      const std::string_view word = code.substr(start, i - start);
      if (word == "module" || word == "macromodule") {
        ++modules;
      } else if (word == "endmodule") {
        ++endmodules;
        if (endmodules > modules) return {false, "endmodule without module"};
      } else if (word == "begin") {
        ++blocks;
      } else if (word == "end") {
        if (--blocks < 0) return {false, "end without begin"};
      }
    } else {
      if (ch == '(') {
        ++parens;
      } else if (ch == ')') {
        if (--parens < 0) return {false, "unbalanced parentheses"};
      }
      ++i;
    }
  }
  if (modules == 0) return {false, "no module keyword"};
  if (modules != endmodules) {
    return {false, "unbalanced module/endmodule (" + std::to_string(modules) + " vs " +
                       std::to_string(endmodules) + ")"};
  }
  if (parens != 0) return {false, "unbalanced parentheses"};
  if (blocks != 0) return {false, "unbalanced begin/end"};
  return {true, {}};
}

std::string extract_verilog(std::string_view generated) {
  static const std::regex kLineStart(R"((^|\n)[ \t]*(module|macromodule)\b)");
  static const std::regex kAnywhere(R"(\b(module|macromodule)\b)");
  const std::string text(generated);
  std::smatch m;
  std::size_t begin = std::string::npos;
  if (std::regex_search(text, m, kLineStart)) {
    begin = static_cast<std::size_t>(m.position(2));
  } else if (std::regex_search(text, m, kAnywhere)) {
    begin = static_cast<std::size_t>(m.position(1));
  }
  if (begin == std::string::npos) return text;

  static constexpr std::string_view kEnd = "endmodule";
  std::size_t end = std::string::npos;
  for (std::size_t pos = text.find(kEnd, begin); pos != std::string::npos; pos = text.find(kEnd, pos + 1)) {
    const std::size_t after = pos + kEnd.size();
    const bool bounded_left = pos == 0 || !ident_char(text[pos - 1]);
    const bool bounded_right = after >= text.size() || !ident_char(text[after]);
    if (bounded_left && bounded_right) end = after;
  }
  std::string out = end == std::string::npos ? text.substr(begin) : text.substr(begin, end - begin);
  if (!out.empty() && out.back() != '\n') out.push_back('\n');
  return out;
}

}  // namespace mev
