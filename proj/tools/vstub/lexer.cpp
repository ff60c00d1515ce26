#include <cctype>
#include <cmath>
#include <string_view>

#include "vstub.hpp"

namespace vstub {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }

constexpr std::string_view kOps[] = {"<<<", ">>>", "===", "!==", "<<", ">>", "<=", ">=", "==", "!=", "&&",
                                     "||",  "**",  "~&",  "~|",  "~^", "^~", "+:", "-:", "::"};

constexpr std::string_view kSkippedDirectives[] = {"timescale", "default_nettype", "resetall", "celldefine",
                                                   "endcelldefine"};

class Lexer {
 public:
  explicit Lexer(const SourceFile& src) : src_(src), s_(src.text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      if (i_ >= s_.size()) break;
      out.push_back(next());
    }
    Token end;
    end.kind = Token::Kind::End;
    end.line = line_;
    out.push_back(end);
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw Diag(src_.name, line_, msg); }

  void skip_space() {
    while (i_ < s_.size()) {
      const char c = s_[i_];
      if (c == '\n') {
        ++line_;
        ++i_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++i_;
      } else if (c == '/' && i_ + 1 < s_.size() && s_[i_ + 1] == '/') {
        while (i_ < s_.size() && s_[i_] != '\n') ++i_;
      } else if (c == '/' && i_ + 1 < s_.size() && s_[i_ + 1] == '*') {
        const auto end = s_.find("*/", i_ + 2);
        if (end == std::string_view::npos) fail("unterminated block comment");
        for (std::size_t k = i_; k < end; ++k) line_ += s_[k] == '\n';
        i_ = end + 2;
      } else if (c == '`') {
        std::size_t j = i_ + 1;
        while (j < s_.size() && ident_char(s_[j])) ++j;
        const std::string_view word = s_.substr(i_ + 1, j - i_ - 1);
        bool known = false;
        for (const auto d : kSkippedDirectives) known = known || d == word;
        if (!known) fail("unsupported compiler directive `" + std::string(word));
        while (i_ < s_.size() && s_[i_] != '\n') ++i_;
      } else {
        break;
      }
    }
  }

  Token make(Token::Kind k, std::string text) const {
    Token t;
    t.kind = k;
    t.text = std::move(text);
    t.line = line_;
    return t;
  }

  Token next() {
    const char c = s_[i_];
    if (ident_start(c)) {
      const std::size_t b = i_;
      while (i_ < s_.size() && ident_char(s_[i_])) ++i_;
      return make(Token::Kind::Ident, std::string(s_.substr(b, i_ - b)));
    }
    if (c == '\\') {
      const std::size_t b = ++i_;
      while (i_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
      return make(Token::Kind::Ident, std::string(s_.substr(b, i_ - b)));
    }
    if (c == '$') {
      const std::size_t b = i_++;
      while (i_ < s_.size() && ident_char(s_[i_])) ++i_;
      return make(Token::Kind::SysIdent, std::string(s_.substr(b, i_ - b)));
    }
    if (c == '"') return string_literal();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '\'') return number();
    for (const auto op : kOps) {
      if (s_.substr(i_, op.size()) == op) {
        i_ += op.size();
        return make(Token::Kind::Op, std::string(op));
      }
    }
    static constexpr std::string_view kSingle = "+-*/%<>!~&|^?:;,.()[]{}#@=";
    if (kSingle.find(c) == std::string_view::npos) fail(std::string("unexpected character '") + c + "'");
    ++i_;
    return make(Token::Kind::Op, std::string(1, c));
  }

  Token string_literal() {
    std::string out;
    ++i_;
    while (i_ < s_.size() && s_[i_] != '"') {
      char c = s_[i_++];
      if (c == '\n') fail("newline in string literal");
      if (c == '\\' && i_ < s_.size()) {
        const char e = s_[i_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '\\': c = '\\'; break;
          case '"': c = '"'; break;
          default: c = e; break;
        }
      }
      out.push_back(c);
    }
    if (i_ >= s_.size()) fail("unterminated string literal");
    ++i_;
    return make(Token::Kind::String, out);
  }

  std::uint64_t digits_to_bits(std::string_view digits, int base, Value& v) {
    std::uint64_t bits = 0;
    const int per = base == 2 ? 1 : base == 8 ? 3 : base == 16 ? 4 : 0;
    if (per == 0) {
      for (const char d : digits) {
        if (d == '_') continue;
        if (!std::isdigit(static_cast<unsigned char>(d))) fail("bad decimal digit");
        bits = bits * 10 + static_cast<std::uint64_t>(d - '0');
      }
      return bits;
    }
    for (const char d : digits) {
      if (d == '_') continue;
      const std::uint64_t group = (1ULL << per) - 1;
      bits <<= per;
      v.dontcare <<= per;
      v.xmask <<= per;
      if (d == 'x' || d == 'X') {
        v.xmask |= group;
      } else if (d == 'z' || d == 'Z' || d == '?') {
        v.dontcare |= group;
      } else {
        int val;
        if (std::isdigit(static_cast<unsigned char>(d))) {
          val = d - '0';
        } else if (std::isxdigit(static_cast<unsigned char>(d))) {
          val = std::tolower(static_cast<unsigned char>(d)) - 'a' + 10;
        } else {
          fail(std::string("bad digit '") + d + "'");
        }
        if (val >= base) fail(std::string("digit '") + d + "' out of range for base");
        bits |= static_cast<std::uint64_t>(val);
      }
    }
    return bits;
  }

  Token number() {
    Token t = make(Token::Kind::Number, {});
    Value v;
    std::size_t b = i_;
    std::string_view size_text;
    if (s_[i_] != '\'') {
      while (i_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
      size_text = s_.substr(b, i_ - b);
      if (i_ < s_.size() && s_[i_] == '.' && i_ + 1 < s_.size() &&
          std::isdigit(static_cast<unsigned char>(s_[i_ + 1]))) {
        // real literal: only used as a delay, rounded
        ++i_;
        while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
        v.bits = static_cast<std::uint64_t>(std::llround(std::stod(std::string(s_.substr(b, i_ - b)))));
        v.is_signed = true;
        t.num = v;
        t.text = std::string(s_.substr(b, i_ - b));
        return t;
      }
      std::size_t j = i_;
      while (j < s_.size() && (s_[j] == ' ' || s_[j] == '\t')) ++j;
      if (j >= s_.size() || s_[j] != '\'') {
        v.bits = digits_to_bits(size_text, 10, v);
        v.is_signed = true;
        t.num = v;
        t.text = std::string(size_text);
        return t;
      }
      i_ = j;
    }
    ++i_;  // '
    if (i_ < s_.size() && (s_[i_] == 's' || s_[i_] == 'S')) {
      v.is_signed = true;
      ++i_;
    }
    if (i_ >= s_.size()) fail("truncated number");
    int base;
    switch (std::tolower(static_cast<unsigned char>(s_[i_]))) {
      case 'b': base = 2; break;
      case 'o': base = 8; break;
      case 'd': base = 10; break;
      case 'h': base = 16; break;
      default: fail("bad number base");
    }
    ++i_;
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
    const std::size_t db = i_;
    while (i_ < s_.size() && (std::isxdigit(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' ||
                              s_[i_] == 'x' || s_[i_] == 'X' || s_[i_] == 'z' || s_[i_] == 'Z' ||
                              s_[i_] == '?')) {
      ++i_;
    }
    if (db == i_) fail("number without digits");
    v.bits = digits_to_bits(s_.substr(db, i_ - db), base, v);
    if (!size_text.empty()) {
      Value tmp;
      const auto size = digits_to_bits(size_text, 10, tmp);
      if (size == 0) fail("zero-width number");
      if (size > 64) fail("numbers wider than 64 bits are not supported");
      v.width = static_cast<int>(size);
      v.sized = true;
      const std::uint64_t mask = v.width == 64 ? ~0ULL : (1ULL << v.width) - 1;
      v.bits &= mask;
      v.dontcare &= mask;
      v.xmask &= mask;
    }
    t.num = v;
    t.text = std::string(s_.substr(b, i_ - b));
    return t;
  }

  const SourceFile& src_;
  std::string_view s_;
  std::size_t i_ = 0;
  int line_ = 1;
};

}  // namespace

std::vector<Token> lex(const SourceFile& src) { return Lexer(src).run(); }

}  // namespace vstub
