#include "cobel/belief_store.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace cobel {

namespace {

using sbl::Term;
using sbl::TermKind;

bool is_state_variable(const std::string& var) {
  const auto base = var.substr(0, var.find('#'));
  return base.find("state") != std::string::npos;
}

bool sorts_match(const Binding& b) {
  for (const auto& [var, term] : b) {
    if (is_state_variable(var) != (term.kind == TermKind::State)) return false;
  }
  return true;
}

bool looks_like_container(const Term& t) {
  static const char* const kNames[] = {"bowl", "plate", "tea_tray", "basket"};
  if (t.kind != TermKind::Object) return false;
  return std::any_of(std::begin(kNames), std::end(kNames),
                     [&](const char* n) { return t.name.find(n) != std::string::npos; });
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

}  // namespace

std::optional<sbl::Term> located_item(const AtomicBelief& f) {
  if (f.relation == rel::kHold || f.relation == rel::kContain) {
    if (f.object.kind == TermKind::Object) return f.object;
    return std::nullopt;
  }
  if ((f.relation == rel::kIn || f.relation == rel::kAt) && f.subject.kind == TermKind::Object) return f.subject;
  return std::nullopt;
}

std::optional<std::string> functional_key(const AtomicBelief& f) {
  if (f.relation == rel::kExplored) return "EXPLORED " + sbl::to_string(f.subject);
  if (f.relation == rel::kAt && f.subject.kind == TermKind::Agent) return "AT " + f.subject.name;
  if (auto item = located_item(f)) return "LOC " + sbl::to_string(*item);
  return std::nullopt;
}

bool canonical_less(const AtomicBelief& a, const AtomicBelief& b) {
  return sbl::to_string(a) < sbl::to_string(b);
}

const std::vector<BeliefRule>& canonical_rules() {
  static const std::vector<BeliefRule> rules = [] {
    const char* const kText[] = {
        "?agent BELIEVE ?object IN ?room",
        "?agent BELIEVE ?bed IN ?room",
        "?agent BELIEVE ?container IN ?room",
        "?agent BELIEVE ?agent HOLD ?object",
        "?agent BELIEVE ?agent HOLD ?container",
        "?agent BELIEVE ?container CONTAIN ?object",
        "?agent BELIEVE ?room EXPLORED ?exploration_state",
        "?agent BELIEVE ?agent AT ?room",
        "?agentA BELIEVE ?agentB BELIEVE ?object IN ?room",
        "?agentA BELIEVE ?agentB BELIEVE ?bed IN ?room",
        "?agentA BELIEVE ?agentB BELIEVE ?container IN ?room",
        "?agentA BELIEVE ?agentB BELIEVE ?agent HOLD ?object",
        "?agentA BELIEVE ?agentB BELIEVE ?agent HOLD ?container",
        "?agentA BELIEVE ?agentB BELIEVE ?container CONTAIN ?object",
        "?agentA BELIEVE ?agentB BELIEVE ?room EXPLORED ?exploration_state",
        "?agentA BELIEVE ?agentB BELIEVE ?agent AT ?room",
    };
    std::vector<BeliefRule> out;
    for (const char* t : kText) out.push_back(sbl::parse(t));
    return out;
  }();
  return rules;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

BeliefWorld::BeliefWorld(std::string owner, std::vector<std::string> collaborators, std::vector<BeliefRule> rules,
                         CatalogPtr catalog)
    : owner_(std::move(owner)), rules_(std::move(rules)), catalog_(std::move(catalog)) {
  for (const auto& r : rules_) linear_rules_.push_back(sbl::linearize(r));
  for (auto& c : collaborators) {
    if (c == owner_) continue;
    first_.emplace(std::move(c), FactSet{});
  }
}

std::vector<std::string> BeliefWorld::collaborators() const {
  std::vector<std::string> out;
  for (const auto& [name, facts] : first_) out.push_back(name);
  return out;
}

const FactSet& BeliefWorld::first(const std::string& collaborator) const {
  auto it = first_.find(collaborator);
  if (it == first_.end()) throw UnknownCollaborator("unknown collaborator " + collaborator);
  return it->second;
}

const FactSet& BeliefWorld::facts(const Partition& p) const {
  return p.is_zero() ? zero_ : first(*p.collaborator);
}

FactSet& BeliefWorld::mutable_facts(const Partition& p) {
  if (p.is_zero()) return zero_;
  auto it = first_.find(*p.collaborator);
  if (it == first_.end()) throw UnknownCollaborator("unknown collaborator " + *p.collaborator);
  return it->second;
}

sbl::BeliefExpr BeliefWorld::wrap(const Partition& p, const AtomicBelief& f) const {
  sbl::BeliefExpr e;
  e.believers.push_back(Term::agent(owner_));
  if (!p.is_zero()) e.believers.push_back(Term::agent(*p.collaborator));
  e.body = f;
  return e;
}

bool BeliefWorld::conforms(const Partition& p, const AtomicBelief& f) const {
  const auto expr = wrap(p, f);
  return std::any_of(linear_rules_.begin(), linear_rules_.end(), [&](const BeliefRule& r) {
    auto b = sbl::unify(r, expr);
    return b && sorts_match(*b);
  });
}

bool BeliefWorld::is_container_item(const Term& t) const {
  return catalog_ ? catalog_->is_container(t) : looks_like_container(t);
}

void BeliefWorld::assert_fact(const Partition& p, const AtomicBelief& f) {
  FactSet& set = mutable_facts(p);
  if (!f.is_ground()) throw RuleViolation("fact is not ground: " + sbl::to_string(f));
  if (!conforms(p, f)) throw RuleViolation("fact conforms to no belief rule: " + sbl::serialize(wrap(p, f)));
  if (set.count(f)) return;

  FactSet next = set;
  if (auto key = functional_key(f)) {
    for (auto it = next.begin(); it != next.end();) {
      if (functional_key(*it) == key) {
        it = next.erase(it);
      } else {
        ++it;
      }
    }
  }
  next.insert(f);

  if (f.relation == rel::kHold) {
    int held = 0;
    int containers = 0;
    for (const auto& g : next) {
      if (g.relation == rel::kHold && g.subject == f.subject) {
        ++held;
        if (is_container_item(g.object)) ++containers;
      }
    }
    if (held > kHandSlots) {
      throw RuleViolation(f.subject.name + " would hold more than " + std::to_string(kHandSlots) +
                          " items: " + sbl::to_string(f));
    }
    if (containers > 1) {
      throw RuleViolation(f.subject.name + " would hold a second container: " + sbl::to_string(f));
    }
  }
  set = std::move(next);
}

bool BeliefWorld::retract(const Partition& p, const AtomicBelief& f) { return mutable_facts(p).erase(f) > 0; }

std::vector<Binding> BeliefWorld::query(const Partition& p, const AtomicBelief& pattern) const {
  std::vector<std::pair<std::string, Binding>> hits;
  for (const auto& f : facts(p)) {
    Binding b;
    if (sbl::unify_atom(pattern, f, b)) hits.emplace_back(sbl::to_string(f), std::move(b));
  }
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Binding> out;
  out.reserve(hits.size());
  for (auto& [key, b] : hits) out.push_back(std::move(b));
  return out;
}

std::vector<Binding> BeliefWorld::query(const Partition& p, const BeliefRule& pattern) const {
  const std::size_t want = p.is_zero() ? 1 : 2;
  if (pattern.believers.size() != want) return {};
  std::vector<std::pair<std::string, Binding>> hits;
  for (const auto& f : facts(p)) {
    const auto expr = wrap(p, f);
    if (auto b = sbl::unify(pattern, expr)) hits.emplace_back(sbl::serialize(expr), std::move(*b));
  }
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Binding> out;
  for (auto& [key, b] : hits) out.push_back(std::move(b));
  return out;
}

MisalignmentReport BeliefWorld::misalignment(const std::string& collaborator) const {
  const FactSet& theirs = first(collaborator);
  MisalignmentReport r;
  for (const auto& f : zero_) {
    if (!theirs.count(f)) r.facts.push_back(f);
  }
  std::sort(r.facts.begin(), r.facts.end(), canonical_less);
  return r;
}

std::string BeliefWorld::snapshot() const {
  std::vector<std::string> lines;
  for (const auto& f : zero_) lines.push_back(sbl::serialize(wrap(Partition::zero(), f)));
  for (const auto& [c, facts] : first_) {
    for (const auto& f : facts) lines.push_back(sbl::serialize(wrap(Partition::first(c), f)));
  }
  std::sort(lines.begin(), lines.end());
  std::string out = "# belief-world\nowner: " + owner_ + "\ncollaborators:";
  for (const auto& [c, facts] : first_) out += " " + c;
  out += "\n";
  for (const auto& l : lines) out += l + "\n";
  return out;
}

BeliefWorld BeliefWorld::load(const std::string& text, std::vector<BeliefRule> rules, CatalogPtr catalog) {
  const auto lines = split_lines(text);
  if (lines.size() < 3 || lines[0] != "# belief-world" || lines[1].rfind("owner: ", 0) != 0 ||
      lines[2].rfind("collaborators:", 0) != 0) {
    throw std::invalid_argument("malformed belief snapshot header");
  }
  std::string owner = lines[1].substr(7);
  std::vector<std::string> collabs;
  std::istringstream cs(lines[2].substr(14));
  for (std::string c; cs >> c;) collabs.push_back(c);
  BeliefWorld w(owner, collabs, std::move(rules), std::move(catalog));
  for (std::size_t i = 3; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto e = sbl::parse(lines[i]);
    if (e.believers.empty() || e.believers[0] != Term::agent(owner)) {
      throw std::invalid_argument("snapshot line " + std::to_string(i + 1) + " has a foreign believer");
    }
    const Partition p = e.believers.size() == 1 ? Partition::zero() : Partition::first(e.believers[1].name);
    w.assert_fact(p, e.body);
  }
  return w;
}

}  // namespace cobel
