#include "cobel/sbl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

namespace cobel::sbl {

namespace {

struct Token {
  std::string text;
  std::size_t offset = 0;
  bool object_ref = false;
  std::string object_name;
  std::uint64_t object_id = 0;
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_char(char c) { return is_upper(c) || is_lower(c) || is_digit(c) || c == '_'; }

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (true) {
    while (i < n && is_space(text[i])) ++i;
    if (i >= n) break;
    Token tok;
    tok.offset = i;
    if (text[i] == '<') {
      const std::size_t close = text.find('>', i + 1);
      auto malformed = [&](std::string_view why) {
        throw ParseError("malformed object reference: " + std::string(why), tokens.size(), tok.offset);
      };
      if (close == std::string_view::npos) malformed("missing '>'");
      std::string_view name = text.substr(i + 1, close - i - 1);
      if (!is_valid_object_name(name)) malformed("invalid name '" + std::string(name) + "'");
      std::size_t j = close + 1;
      while (j < n && is_space(text[j])) ++j;
      if (j >= n || text[j] != '(') malformed("missing '(' after <" + std::string(name) + ">");
      const std::size_t digits_begin = j + 1;
      std::size_t k = digits_begin;
      while (k < n && is_digit(text[k])) ++k;
      if (k == digits_begin || k >= n || text[k] != ')') malformed("id must be digits in parentheses");
      std::uint64_t id = 0;
      const auto [ptr, ec] = std::from_chars(text.data() + digits_begin, text.data() + k, id);
      if (ec != std::errc{}) malformed("id out of range");
      tok.object_ref = true;
      tok.object_name = std::string(name);
      tok.object_id = id;
      tok.text = std::string(text.substr(i, k + 1 - i));
      i = k + 1;
      if (i < n && !is_space(text[i])) {
        throw ParseError("malformed object reference: trailing characters after ')'", tokens.size(),
                         tok.offset);
      }
    } else {
      std::size_t j = i;
      while (j < n && !is_space(text[j])) ++j;
      tok.text = std::string(text.substr(i, j - i));
      i = j;
    }
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

bool is_variable_token(std::string_view s) {
  if (s.size() < 2 || s[0] != '?') return false;
  if (!(is_upper(s[1]) || is_lower(s[1]) || s[1] == '_')) return false;
  return std::all_of(s.begin() + 1, s.end(), is_ident_char);
}

Term term_from_token(const Token& tok, std::size_t index) {
  if (tok.object_ref) return Term::object(tok.object_name, tok.object_id);
  const std::string& s = tok.text;
  if (is_variable_token(s)) return Term::variable(s.substr(1));
  if (s == kBelieve) throw ParseError("unexpected BELIEVE", index, tok.offset);
  if (is_agent_name(s)) return Term::agent(s);
  if (is_state_value(s)) return Term::state(s);
  if (!s.empty() && s[0] == '<') throw ParseError("malformed object reference '" + s + "'", index, tok.offset);
  throw ParseError("unrecognized token '" + s + "'", index, tok.offset);
}

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(tokenize(text)), text_size_(text.size()) {}

  BeliefExpr parse_expr() {
    if (tokens_.empty()) throw ParseError("empty input", 0, 0);
    std::size_t believe_count = 0;
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (!tokens_[i].object_ref && tokens_[i].text == kBelieve && ++believe_count > kMaxBelievers) {
        throw ParseError("more than " + std::to_string(kMaxBelievers) +
                             " BELIEVE operators (only zero- and first-order beliefs)",
                         i, tokens_[i].offset);
      }
    }
    BeliefExpr e;
    e.believers.push_back(believer());
    expect_believe();
    if (pos_ + 1 < tokens_.size() && is_believe(pos_ + 1)) {
      e.believers.push_back(believer());
      expect_believe();
    }
    e.body = atom();
    finish();
    return e;
  }

  AtomicBelief parse_atom_only() {
    if (tokens_.empty()) throw ParseError("empty input", 0, 0);
    AtomicBelief a = atom();
    finish();
    return a;
  }

  Term parse_term_only() {
    if (tokens_.empty()) throw ParseError("empty input", 0, 0);
    Term t = term_from_token(next("term"), pos_ - 1);
    finish();
    return t;
  }

 private:
  bool is_believe(std::size_t i) const { return !tokens_[i].object_ref && tokens_[i].text == kBelieve; }

  const Token& next(std::string_view what) {
    if (pos_ >= tokens_.size()) {
      throw ParseError("unexpected end of input, expected " + std::string(what), pos_, text_size_);
    }
    return tokens_[pos_++];
  }

  void expect_believe() {
    const Token& tok = next("BELIEVE");
    if (tok.object_ref || tok.text != kBelieve) {
      throw ParseError("expected BELIEVE, found '" + tok.text + "'", pos_ - 1, tok.offset);
    }
  }

  Term believer() {
    const std::size_t index = pos_;
    const Token& tok = next("believer");
    Term t = term_from_token(tok, index);
    if (t.kind != TermKind::Agent && t.kind != TermKind::Variable) {
      throw ParseError("believer must be an agent name or variable, found '" + tok.text + "'", index,
                       tok.offset);
    }
    return t;
  }

  AtomicBelief atom() {
    AtomicBelief a;
    {
      const std::size_t index = pos_;
      const Token& tok = next("subject");
      a.subject = term_from_token(tok, index);
      if (a.subject.kind == TermKind::State) {
        throw ParseError("subject must be an entity, found state '" + tok.text + "'", index, tok.offset);
      }
    }
    {
      const std::size_t index = pos_;
      const Token& tok = next("relation");
      if (tok.object_ref || !is_relation_symbol(tok.text)) {
        const bool lowercase = !tok.object_ref && !tok.text.empty() &&
                               std::any_of(tok.text.begin(), tok.text.end(), is_lower);
        throw ParseError(lowercase ? "relation symbol must be uppercase: '" + tok.text + "'"
                                   : "invalid relation symbol '" + tok.text + "'",
                         index, tok.offset);
      }
      a.relation = tok.text;
    }
    {
      const std::size_t index = pos_;
      const Token& tok = next("object");
      a.object = term_from_token(tok, index);
      if (a.relation == "EXPLORED" && a.object.kind != TermKind::Variable &&
          !(a.object.kind == TermKind::State &&
            (a.object.name == "none" || a.object.name == "part" || a.object.name == "all"))) {
        throw ParseError("EXPLORED takes exactly one of none, part, all", index, tok.offset);
      }
    }
    return a;
  }

  void finish() {
    if (pos_ < tokens_.size()) {
      throw ParseError("trailing token '" + tokens_[pos_].text + "'", pos_, tokens_[pos_].offset);
    }
  }

  std::vector<Token> tokens_;
  std::size_t text_size_;
  std::size_t pos_ = 0;
};

bool unify_term(const Term& pattern, const Term& ground, Binding& b) {
  if (!pattern.is_variable()) return pattern == ground;
  if (ground.is_variable()) return false;
  auto [it, inserted] = b.emplace(pattern.name, ground);
  return inserted || it->second == ground;
}

Term substitute_term(const Term& t, const Binding& b) {
  if (!t.is_variable()) return t;
  auto it = b.find(t.name);
  if (it == b.end()) throw SubstitutionError("unbound ?" + t.name);
  return it->second;
}

}  // namespace

ParseError::ParseError(std::string message, std::size_t token_index, std::size_t char_offset)
    : std::runtime_error("at token " + std::to_string(token_index) + ": " + message),
      token_index_(token_index),
      char_offset_(char_offset) {}

std::string to_string(const Term& t) {
  switch (t.kind) {
    case TermKind::Agent:
    case TermKind::State:
      return t.name;
    case TermKind::Object:
      return "<" + t.name + ">(" + std::to_string(t.id) + ")";
    case TermKind::Variable:
      return "?" + t.name;
  }
  return {};
}

RelationKind AtomicBelief::kind() const {
  switch (object.kind) {
    case TermKind::Agent:
    case TermKind::Object:
      return RelationKind::Predicate;
    case TermKind::State:
      return RelationKind::Attribute;
    case TermKind::Variable:
      break;
  }
  return RelationKind::Open;
}

std::string to_string(const AtomicBelief& a) {
  return to_string(a.subject) + " " + a.relation + " " + to_string(a.object);
}

bool BeliefExpr::is_ground() const {
  return body.is_ground() &&
         std::none_of(believers.begin(), believers.end(), [](const Term& t) { return t.is_variable(); });
}

std::vector<std::string> BeliefExpr::variables() const {
  std::vector<std::string> out;
  auto add = [&](const Term& t) {
    if (t.is_variable() && std::find(out.begin(), out.end(), t.name) == out.end()) out.push_back(t.name);
  };
  for (const auto& b : believers) add(b);
  add(body.subject);
  add(body.object);
  return out;
}

bool is_relation_symbol(std::string_view s) {
  if (s.empty() || !is_upper(s[0]) || s == kBelieve) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return is_upper(c) || c == '_'; });
}

bool is_agent_name(std::string_view s) {
  if (s.empty() || !is_upper(s[0]) || s == kBelieve) return false;
  return std::all_of(s.begin(), s.end(), is_ident_char);
}

bool is_state_value(std::string_view s) {
  if (s.empty() || !is_lower(s[0])) return false;
  return std::all_of(s.begin(), s.end(), is_ident_char);
}

bool is_valid_object_name(std::string_view s) {
  if (s.empty()) return false;
  return std::none_of(s.begin(), s.end(),
                      [](char c) { return is_space(c) || c == '<' || c == '>' || c == '(' || c == ')'; });
}

BeliefExpr parse(std::string_view text) { return Parser(text).parse_expr(); }

std::optional<BeliefExpr> try_parse(std::string_view text) {
  try {
    return parse(text);
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

AtomicBelief parse_atom(std::string_view text) { return Parser(text).parse_atom_only(); }

Term parse_term(std::string_view text) { return Parser(text).parse_term_only(); }

std::string serialize(const BeliefExpr& e) {
  std::string out;
  for (const auto& b : e.believers) {
    out += to_string(b);
    out += ' ';
    out += kBelieve;
    out += ' ';
  }
  out += to_string(e.body);
  return out;
}

bool unify_atom(const AtomicBelief& pattern, const AtomicBelief& ground, Binding& binding) {
  return pattern.relation == ground.relation && unify_term(pattern.subject, ground.subject, binding) &&
         unify_term(pattern.object, ground.object, binding);
}

std::optional<Binding> unify(const BeliefRule& rule, const BeliefExpr& ground) {
  if (rule.believers.size() != ground.believers.size()) return std::nullopt;
  Binding b;
  for (std::size_t i = 0; i < rule.believers.size(); ++i) {
    if (!unify_term(rule.believers[i], ground.believers[i], b)) return std::nullopt;
  }
  if (!unify_atom(rule.body, ground.body, b)) return std::nullopt;
  return b;
}

AtomicBelief substitute(const AtomicBelief& pattern, const Binding& binding) {
  return {substitute_term(pattern.subject, binding), pattern.relation, substitute_term(pattern.object, binding)};
}

BeliefExpr substitute(const BeliefRule& rule, const Binding& binding) {
  BeliefExpr out;
  out.believers.reserve(rule.believers.size());
  for (const auto& b : rule.believers) out.believers.push_back(substitute_term(b, binding));
  out.body = substitute(rule.body, binding);
  return out;
}

BeliefRule linearize(const BeliefRule& rule) {
  std::map<std::string, int> seen;
  auto rename = [&](Term t) {
    if (t.is_variable()) {
      const int n = seen[t.name]++;
      if (n > 0) t.name += "#" + std::to_string(n);
    }
    return t;
  };
  BeliefRule out;
  for (const auto& b : rule.believers) out.believers.push_back(rename(b));
  out.body.subject = rename(rule.body.subject);
  out.body.relation = rule.body.relation;
  out.body.object = rename(rule.body.object);
  return out;
}

}  // namespace cobel::sbl
