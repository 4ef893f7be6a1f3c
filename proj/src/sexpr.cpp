#include "vlift/sexpr.hpp"

#include "vlift/error.hpp"

#include <cctype>

namespace vlift {

SExpr SExpr::make_list(std::vector<SExpr> items) {
  SExpr e;
  e.is_list = true;
  e.list = std::move(items);
  return e;
}

SExpr L(std::vector<SExpr> items) { return SExpr::make_list(std::move(items)); }

bool SExpr::headed(std::string_view head) const {
  return is_list && !list.empty() && list[0].is_atom() && list[0].atom == head;
}

std::string SExpr::str() const {
  if (!is_list) return atom;
  std::string out = "(";
  for (size_t i = 0; i < list.size(); ++i) {
    if (i) out += ' ';
    out += list[i].str();
  }
  out += ')';
  return out;
}

namespace {

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  bool at_end() {
    skip();
    return pos_ >= text_.size();
  }

  SExpr read() {
    skip();
    if (pos_ >= text_.size()) throw Error("unexpected end of s-expression input");
    char c = text_[pos_];
    if (c == ')') throw Error("unbalanced ')' at offset " + std::to_string(pos_));
    if (c == '(') {
      ++pos_;
      std::vector<SExpr> items;
      while (true) {
        skip();
        if (pos_ >= text_.size()) throw Error("missing ')'");
        if (text_[pos_] == ')') {
          ++pos_;
          return L(std::move(items));
        }
        items.push_back(read());
      }
    }
    if (c == '|') {
      size_t end = text_.find('|', pos_ + 1);
      if (end == std::string_view::npos) throw Error("unterminated quoted symbol");
      std::string atom(text_.substr(pos_, end - pos_ + 1));
      pos_ = end + 1;
      return SExpr(atom);
    }
    if (c == '"') {
      size_t end = pos_ + 1;
      while (end < text_.size()) {
        if (text_[end] == '"') {
          if (end + 1 < text_.size() && text_[end + 1] == '"') {
            end += 2;
            continue;
          }
          break;
        }
        ++end;
      }
      std::string atom(text_.substr(pos_, end - pos_ + 1));
      pos_ = end + 1;
      return SExpr(atom);
    }
    size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != ';')
      ++pos_;
    return SExpr(std::string(text_.substr(start, pos_ - start)));
  }

 private:
  void skip() {
    while (pos_ < text_.size()) {
      if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      } else if (text_[pos_] == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  size_t pos_ = 0;
};

}  // namespace

std::vector<SExpr> parse_sexprs(std::string_view text) {
  Reader r(text);
  std::vector<SExpr> out;
  while (!r.at_end()) out.push_back(r.read());
  return out;
}

SExpr parse_sexpr(std::string_view text) {
  auto all = parse_sexprs(text);
  if (all.size() != 1) throw Error("expected exactly one s-expression, got " + std::to_string(all.size()));
  return all.front();
}

}  // namespace vlift
