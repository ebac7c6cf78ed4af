#include "cobel/reasoner.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "cobel/planning.hpp"
#include "cobel/rule_consensus.hpp"

namespace cobel::reasoner {

namespace {

struct Meta {
  TemplateId id;
  std::string_view name;
  std::vector<std::string> labels;
};

const std::vector<Meta>& meta() {
  static const std::vector<Meta> m = {
      {TemplateId::RulesPropose, "rules_propose",
       {"Entity and predicate reasoning", "Zero order belief rules", "First order belief rules"}},
      {TemplateId::RulesRefine, "rules_refine", {"Reasoning", "Zero order belief rules", "First order belief rules"}},
      {TemplateId::RulesReview, "rules_review", {"Reasoning", "Suggestions", "Satisfied"}},
      {TemplateId::UpdateFirst, "update_first", {"Extracted Information", "First order beliefs", "$OPPO_NAME$'s plan"}},
      {TemplateId::UpdateZero, "update_zero", {"Extracted Information", "Zero order beliefs"}},
      {TemplateId::PredictFirst, "predict_first", {"reasoning", "plans", "plan1", "plan2", "plan3"}},
      {TemplateId::PredictZero, "predict_zero", {"reasoning", "plan"}},
      {TemplateId::Adaptive, "adaptive", {"reasons", "answer", "misaligned information"}},
      {TemplateId::Communicate, "communicate", {"Message"}},
      {TemplateId::PlanNext, "plan_next", {"reasons", "answer"}},
      {TemplateId::Replan, "replan", {"reasoning", "plan"}},
  };
  return m;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Lowercase with typographic apostrophes folded to ASCII.
std::string normalize(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
        static_cast<unsigned char>(s[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(s[i + 2]) == 0x99 || static_cast<unsigned char>(s[i + 2]) == 0x98)) {
      out += '\'';
      i += 2;
      continue;
    }
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(s[i])));
  }
  return out;
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

struct Chunked {
  std::vector<std::string> literals;  // text between placeholders
  std::vector<std::string> vars;      // placeholder names, in order
};

Chunked chunk(std::string_view text) {
  Chunked c;
  std::string cur;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '$') {
      std::size_t j = i + 1;
      while (j < text.size() && (std::isupper(static_cast<unsigned char>(text[j])) || text[j] == '_' ||
                                 std::isdigit(static_cast<unsigned char>(text[j])))) {
        ++j;
      }
      if (j < text.size() && text[j] == '$' && j > i + 1) {
        c.literals.push_back(cur);
        cur.clear();
        c.vars.emplace_back(text.substr(i + 1, j - i - 1));
        i = j + 1;
        continue;
      }
    }
    cur += text[i++];
  }
  c.literals.push_back(cur);
  return c;
}

std::string substitute(std::string_view text, const Vars& vars, bool strict) {
  const Chunked c = chunk(text);
  std::string out = c.literals[0];
  for (std::size_t i = 0; i < c.vars.size(); ++i) {
    auto it = vars.find(c.vars[i]);
    if (it != vars.end()) {
      out += it->second;
    } else if (strict) {
      throw RenderError("unbound " + c.vars[i]);
    } else {
      out += "$" + c.vars[i] + "$";
    }
    out += c.literals[i + 1];
  }
  return out;
}

std::vector<PromptTemplate> build_catalog() {
  std::map<std::string_view, std::string_view> files(embedded::templates().begin(), embedded::templates().end());
  std::vector<PromptTemplate> out;
  for (const auto& m : meta()) {
    auto it = files.find(m.name);
    if (it == files.end()) throw std::logic_error("missing embedded template " + std::string(m.name));
    PromptTemplate t{m.id, std::string(m.name), std::string(it->second), {}, m.labels};
    for (const auto& v : chunk(t.text).vars) {
      if (std::find(t.required_vars.begin(), t.required_vars.end(), v) == t.required_vars.end()) {
        t.required_vars.push_back(v);
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

const std::vector<PromptTemplate>& catalog() {
  static const std::vector<PromptTemplate> c = build_catalog();
  return c;
}

/// Label match at the start of a decorated line; returns the text after ':'.
std::optional<std::string> match_label(const std::string& norm_line, const std::string& raw_line,
                                       const std::string& norm_label) {
  std::size_t i = 0;
  while (i < norm_line.size() && (norm_line[i] == ' ' || norm_line[i] == '\t' || norm_line[i] == '{' ||
                                  norm_line[i] == '*' || norm_line[i] == '#' || norm_line[i] == '-')) {
    ++i;
  }
  if (norm_line.compare(i, norm_label.size(), norm_label) != 0) return std::nullopt;
  std::size_t j = i + norm_label.size();
  while (j < norm_line.size() && (norm_line[j] == ' ' || norm_line[j] == '*')) ++j;
  if (j >= norm_line.size() || norm_line[j] != ':') return std::nullopt;
  // Offsets in the normalized line track the raw line except for folded
  // apostrophes; recover the remainder from the raw line's first ':' after the label.
  const std::size_t raw_colon = raw_line.find(':', std::min(i, raw_line.size()));
  if (raw_colon == std::string::npos) return std::string();
  std::size_t k = raw_colon + 1;
  while (k < raw_line.size() && raw_line[k] == '*') ++k;
  return raw_line.substr(k);
}

std::string strip_brace(std::string s) {
  s = trim(s);
  if (!s.empty() && s.back() == '}') s.pop_back();
  return trim(s);
}

std::string unwrap(std::string s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '{' && s.back() == '}' && s.find('{', 1) == std::string::npos) {
    s = trim(s.substr(1, s.size() - 2));
  }
  return s;
}

}  // namespace

std::string_view name(TemplateId id) {
  for (const auto& m : meta()) {
    if (m.id == id) return m.name;
  }
  return "unknown";
}

std::optional<TemplateId> template_from_name(std::string_view n) {
  for (const auto& m : meta()) {
    if (m.name == n) return m.id;
  }
  return std::nullopt;
}

const PromptTemplate& get(TemplateId id) { return catalog().at(static_cast<std::size_t>(id)); }

std::string render(const PromptTemplate& t, const Vars& vars) { return substitute(t.text, vars, true); }

std::vector<std::string> rendered_labels(const PromptTemplate& t, const Vars& vars) {
  std::vector<std::string> out;
  for (const auto& l : t.output_labels) out.push_back(substitute(l, vars, false));
  return out;
}

std::optional<TemplateId> identify(std::string_view prompt) {
  std::optional<TemplateId> best;
  std::size_t best_len = 0;
  for (const auto& t : catalog()) {
    const auto c = chunk(t.text);
    std::size_t pos = 0;
    std::size_t matched = 0;
    bool ok = true;
    for (const auto& lit : c.literals) {
      if (lit.empty()) continue;
      const auto at = prompt.find(lit, pos);
      if (at == std::string_view::npos) {
        ok = false;
        break;
      }
      pos = at + lit.size();
      matched += lit.size();
    }
    if (ok && matched > best_len) {
      best = t.id;
      best_len = matched;
    }
  }
  return best;
}

std::string_view to_string(Backend b) { return b == Backend::Scripted ? "scripted" : "llm"; }

ParseFailure::ParseFailure(std::string message, std::string missing_label)
    : std::runtime_error(std::move(message)), missing_label_(std::move(missing_label)) {}

ReasonerResponse parse_sections(const PromptTemplate& t, std::string_view text, const Vars& vars) {
  const auto labels = rendered_labels(t, vars);
  std::vector<std::string> norm_labels;
  for (const auto& l : labels) norm_labels.push_back(normalize(l));

  ReasonerResponse r;
  r.raw = std::string(text);
  std::vector<std::string> content(labels.size());
  std::vector<bool> braced(labels.size(), false);
  std::size_t next = 0;
  std::optional<std::size_t> current;
  for (const auto& raw_line : lines_of(text)) {
    const std::string norm = normalize(raw_line);
    std::optional<std::size_t> hit;
    std::string rest;
    for (std::size_t k = 0; k < norm_labels.size(); ++k) {
      if (auto m = match_label(norm, raw_line, norm_labels[k])) {
        if (!hit || norm_labels[k].size() > norm_labels[*hit].size()) {
          hit = k;
          rest = *m;
        }
      }
    }
    if (hit) {
      if (*hit < next) {
        throw ParseFailure("label out of order: " + labels[*hit], next < labels.size() ? labels[next] : labels.back());
      }
      if (*hit > next) throw ParseFailure("missing label: " + labels[next], labels[next]);
      current = *hit;
      next = *hit + 1;
      content[*current] = rest;
      braced[*current] = trim(raw_line).rfind('{', 0) == 0;
      continue;
    }
    if (current) content[*current] += "\n" + raw_line;
  }
  if (next < labels.size()) throw ParseFailure("missing label: " + labels[next], labels[next]);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    r.sections.emplace_back(labels[k], unwrap(braced[k] ? strip_brace(content[k]) : content[k]));
  }
  return r;
}

void check_vars(const ReasonerRequest& req) {
  const auto& t = get(req.id);
  for (const auto& v : t.required_vars) {
    if (!req.vars.count(v)) throw RenderError("unbound " + v);
  }
}

// ---- var encodings ----

bool is_none(std::string_view text) {
  const std::string t = lower(trim(text));
  return t.empty() || t == "none" || t == "none." || t == "n/a" || t == "[]";
}

std::string format_beliefs(const BeliefWorld& w, const Partition& p) {
  std::vector<std::string> lines;
  for (const auto& f : w.facts(p)) lines.push_back(sbl::serialize(w.wrap(p, f)));
  std::sort(lines.begin(), lines.end());
  if (lines.empty()) return "None";
  std::string out;
  for (const auto& l : lines) out += (out.empty() ? "" : "\n") + l;
  return out;
}

std::string format_facts(const std::vector<AtomicBelief>& facts, std::string_view sep) {
  if (facts.empty()) return "None";
  std::string out;
  for (const auto& f : facts) {
    if (!out.empty()) out += sep;
    out += sbl::to_string(f);
  }
  return out;
}

std::vector<AtomicBelief> read_facts(std::string_view text) {
  std::vector<AtomicBelief> out;
  for (const auto& line : lines_of(text)) {
    std::size_t start = 0;
    while (start <= line.size()) {
      auto end = line.find(';', start);
      if (end == std::string::npos) end = line.size();
      std::string item = trim(std::string_view(line).substr(start, end - start));
      start = end + 1;
      while (!item.empty() && (item.front() == '-' || item.front() == '*' || item.front() == '[')) {
        item = trim(item.substr(1));
      }
      while (!item.empty() && (item.back() == ']' || item.back() == ',' || item.back() == '.')) item.pop_back();
      if (item.empty()) continue;
      if (auto e = sbl::try_parse(item)) {
        if (e->is_ground()) out.push_back(e->body);
        continue;
      }
      try {
        auto a = sbl::parse_atom(item);
        if (a.is_ground()) out.push_back(a);
      } catch (const sbl::ParseError&) {
      }
    }
  }
  return out;
}

std::string format_plan(const std::optional<Plan>& p) { return p ? to_text(*p) : "None"; }

std::string format_plans(const std::vector<Plan>& plans) {
  if (plans.empty()) return "None";
  std::string out;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    if (i) out += "\n";
    out += "plan" + std::to_string(i + 1) + ": " + to_text(plans[i]);
  }
  return out;
}

std::vector<Plan> read_plans(std::string_view text) {
  std::vector<Plan> out;
  for (const auto& line : lines_of(text)) {
    std::string l = trim(line);
    const std::string low = lower(l);
    if (low.rfind("plan", 0) == 0) {
      const auto colon = l.find(':');
      if (colon != std::string::npos && colon < 8) l = trim(l.substr(colon + 1));
    }
    if (is_none(l)) continue;
    if (auto p = parse_plan(l)) out.push_back(*p);
  }
  return out;
}

// ---- scripted backend ----

ScriptedReasoner::ScriptedReasoner(CatalogPtr catalog) : catalog_(std::move(catalog)) {}

ReasonerResponse ScriptedReasoner::complete(const ReasonerRequest& req) {
  check_vars(req);
  ReasonerResponse r = parse_sections(get(req.id), answer(req), req.vars);
  r.backend = Backend::Scripted;
  return r;
}

namespace {

FactSet to_set(const std::vector<AtomicBelief>& v) { return FactSet(v.begin(), v.end()); }

std::string declared_prefix(const std::string& agent) { return agent + "'s declared plan:"; }

std::string rules_block(const std::vector<BeliefRule>& rules, int order) {
  std::string out;
  for (const auto& r : rules) {
    if (r.order() != order) continue;
    out += "\n" + sbl::serialize(r);
  }
  return out;
}

}  // namespace

std::string ScriptedReasoner::answer(const ReasonerRequest& req) const {
  check_vars(req);
  const Catalog& cat = *catalog_;
  const auto& v = req.vars;
  auto var = [&](const char* k) -> const std::string& { return v.at(k); };

  switch (req.id) {
    case TemplateId::RulesPropose: {
      const auto& rules = canonical_rules();
      return "Entity and predicate reasoning: entities are agents, rooms, target objects, containers and the "
             "bed; predicates are IN, AT, HOLD, CONTAIN and the attribute EXPLORED.\nZero order belief rules:" +
             rules_block(rules, 0) + "\nFirst order belief rules:" + rules_block(rules, 1) + "\n";
    }
    case TemplateId::RulesRefine: {
      const auto fixed = consensus::scripted_refine(var("PREVIOUS_CONTENT"));
      return "Reasoning: removed repeated rules and added the missing coverage.\nZero order belief rules:" +
             rules_block(fixed, 0) + "\nFirst order belief rules:" + rules_block(fixed, 1) + "\n";
    }
    case TemplateId::RulesReview: {
      const auto review = consensus::scripted_review(var("PROPOSAL_CONTENT"));
      return "Reasoning: " + review.reasoning + "\nSuggestions: " + (review.suggestions.empty() ? "None" : review.suggestions) +
             "\nSatisfied: " + (review.satisfied ? "yes" : "no") + "\n";
    }
    case TemplateId::UpdateFirst:
    case TemplateId::UpdateZero: {
      const std::string& me = var("AGENT_NAME");
      const std::string& sender = var("OPPO_NAME");
      std::vector<AtomicBelief> facts;
      std::optional<Plan> plan;
      bool any = false;
      for (const auto& line : lines_of(var("MESSAGE"))) {
        std::string text = trim(line);
        if (text.empty()) continue;
        if (text.rfind("FACTS:", 0) != 0) {
          const auto colon = text.find(": ");
          if (colon != std::string::npos) text = trim(text.substr(colon + 2));
        }
        if (auto m = planning::parse_message(text)) {
          any = true;
          facts.insert(facts.end(), m->facts.begin(), m->facts.end());
          if (m->plan) plan = m->plan;
        }
      }
      std::string out = "Extracted Information: ";
      out += any ? std::to_string(facts.size()) + " facts stated by " + sender : std::string("None");
      if (req.id == TemplateId::UpdateFirst) {
        out += "\nFirst order beliefs:";
        for (const auto& f : facts) out += "\n" + me + " BELIEVE " + sender + " BELIEVE " + sbl::to_string(f);
        if (facts.empty()) out += " None";
        out += "\n" + sender + "'s plan: " + format_plan(plan) + "\n";
      } else {
        out += "\nZero order beliefs:";
        for (const auto& f : facts) out += "\n" + me + " BELIEVE " + sbl::to_string(f);
        if (facts.empty()) out += " None";
        out += "\n";
      }
      return out;
    }
    case TemplateId::PredictFirst: {
      const std::string& me = var("AGENT_NAME");
      const std::string& them = var("OPPO_NAME");
      std::vector<Plan> known;
      const std::string prefix = declared_prefix(me);
      for (const auto& line : lines_of(var("FIRST_ORDER_BELIEF"))) {
        const std::string t = trim(line);
        if (t.rfind(prefix, 0) == 0) {
          if (auto p = parse_plan(t.substr(prefix.size()))) known.push_back(*p);
        }
      }
      const auto facts = to_set(read_facts(var("FIRST_ORDER_BELIEF")));
      const auto plans = planning::top_candidates(facts, them, cat, known);
      std::string out = "reasoning: " + them + " knows " + std::to_string(facts.size()) + " facts";
      out += known.empty() ? ".\n" : " and my declared plan.\n";
      out += "plans: " + std::to_string(plans.size()) + " candidates\n";
      for (std::size_t i = 0; i < 3; ++i) {
        out += "plan" + std::to_string(i + 1) + ": " + (i < plans.size() ? to_text(plans[i]) : "None") + "\n";
      }
      return out;
    }
    case TemplateId::PredictZero: {
      const auto facts = to_set(read_facts(var("ZERO_ORDER_BELIEF")));
      const auto plan = planning::best_plan(facts, var("AGENT_NAME"), cat);
      return std::string("reasoning: ") + (plan ? "highest-priority candidate." : "nothing left to do.") +
             "\nplan: " + format_plan(plan) + "\n";
    }
    case TemplateId::Replan: {
      const auto facts = to_set(read_facts(var("ZERO_ORDER_BELIEF")));
      const auto avoid = read_plans(var("OPPO_PLAN"));
      const auto plan = planning::replan(facts, var("AGENT_NAME"), cat, avoid);
      return "reasoning: avoid the rooms and objects in " + var("OPPO_NAME") + "'s plan.\nplan: " +
             format_plan(plan) + "\n";
    }
    case TemplateId::Adaptive: {
      const auto zero = read_facts(var("ZERO_ORDER_BELIEF"));
      const auto first = to_set(read_facts(var("MY_FIRST_ORDER_BELIEF")));
      std::vector<AtomicBelief> mis;
      for (const auto& f : to_set(zero)) {
        if (!first.count(f)) mis.push_back(f);
      }
      std::sort(mis.begin(), mis.end(), canonical_less);
      const auto mine = parse_plan(var("MY_PLAN"));
      const auto theirs = read_plans(var("OPPO_PLANS"));
      std::vector<planning::Conflict> conflicts;
      if (mine) conflicts = planning::find_conflicts(*mine, theirs, cat);
      const bool heavy = planning::is_heavy(conflicts, mis, cat);
      std::string reasons;
      for (const auto& c : conflicts) {
        if (!reasons.empty()) reasons += "; ";
        reasons += std::string(planning::to_string(c.kind)) + " " + sbl::to_string(c.entity) + " (my step " +
                   std::to_string(c.my_step + 1) + ", plan" + std::to_string(c.their_plan + 1) + " step " +
                   std::to_string(c.their_step + 1) + ")";
      }
      if (reasons.empty()) reasons = "no conflicting steps";
      reasons += "; " + std::to_string(mis.size()) + " misaligned facts";
      return "reasons: " + reasons + "\nanswer: " + (heavy ? "Yes" : "No") +
             "\nmisaligned information: " + (heavy ? format_facts(mis) : std::string("None")) + "\n";
    }
    case TemplateId::Communicate: {
      const auto facts = read_facts(var("MISALIGNED_INFORMATION"));
      return "Message: " + planning::compose_message(facts, parse_plan(var("MY_PLAN")), &cat) + "\n";
    }
    case TemplateId::PlanNext: {
      const auto facts = to_set(read_facts(var("ZERO_ORDER_BELIEF")));
      const auto plan = parse_plan(var("MY_PLAN"));
      if (!plan) return "reasons: no plan.\nanswer: " + std::string(kSubplanDone) + "\n";
      const auto history = parse_actions(var("PREVIOUS_ACTIONS"));
      const auto step = planning::next_step(facts, var("AGENT_NAME"), cat, *plan, history);
      switch (step.kind) {
        case planning::NextStep::Kind::Act:
          return "reasons: first unfinished step.\nanswer: " + to_text(*step.action) + "\n";
        case planning::NextStep::Kind::SubplanDone:
          return "reasons: every step is finished.\nanswer: " + std::string(kSubplanDone) + "\n";
        case planning::NextStep::Kind::Stale:
          return "reasons: " + step.reason + ".\nanswer: " + std::string(kStalePlan) + "\n";
      }
      return {};
    }
  }
  return {};
}

}  // namespace cobel::reasoner
