#include "cobel/collab_engine.hpp"

#include <algorithm>
#include <set>

namespace cobel {

namespace {

using reasoner::ReasonerRequest;
using reasoner::ReasonerResponse;
using reasoner::TemplateId;
using reasoner::Vars;
using sbl::Term;

const Catalog& catalog_of(const BeliefWorld& w) {
  if (!w.catalog()) throw std::logic_error("belief world has no catalog");
  return *w.catalog();
}

std::string rules_text(const BeliefWorld& w) {
  std::string out;
  for (const auto& r : w.rules()) out += (out.empty() ? "" : "\n") + sbl::serialize(r);
  return out;
}

std::string others(const BeliefWorld& w) {
  const auto cs = w.collaborators();
  if (cs.empty()) return "nobody";
  std::string out;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (i) out += i + 1 == cs.size() ? " and " : ", ";
    out += cs[i];
  }
  return out;
}

Vars base_vars(const BeliefWorld& w, const std::string& oppo) {
  return {{"AGENT_NAME", w.owner()},
          {"OPPO_NAME", oppo},
          {"GOAL", catalog_of(w).goal().describe()},
          {"ZERO_ORDER_BELIEF", reasoner::format_beliefs(w, Partition::zero())}};
}

ReasonerResponse call(reasoner::Reasoner& r, TemplateId id, Vars vars, CallLog* calls) {
  ReasonerRequest req{id, std::move(vars)};
  ReasonerResponse resp = r.complete(req);
  if (calls) {
    Json p;
    p["template"] = std::string(reasoner::name(id));
    p["backend"] = std::string(reasoner::to_string(resp.backend));
    p["fallback"] = resp.fallback_used;
    p["raw"] = resp.raw;
    if (!resp.notes.empty()) p["notes"] = resp.notes;
    calls->push_back({"reasoner", std::move(p), std::nullopt});
  }
  return resp;
}

Exploration level_of(const FactSet& facts, const ObjectRef& room) {
  for (const auto& f : facts) {
    if (f.relation == rel::kExplored && f.subject == room) {
      if (f.object.name == "all") return Exploration::All;
      if (f.object.name == "part") return Exploration::Part;
      return Exploration::None;
    }
  }
  return Exploration::None;
}

bool holds_item(const FactSet& zero, const Term& me, const ObjectRef& x) {
  if (zero.count({me, rel::kHold, x})) return true;
  for (const auto& f : zero) {
    if (f.relation == rel::kContain && f.object == x && zero.count({me, rel::kHold, f.subject})) return true;
  }
  return false;
}

/// Message facts the owner already knows better.
bool contradicts_own_knowledge(const BeliefWorld& w, const AtomicBelief& f) {
  const Catalog& cat = catalog_of(w);
  const Term me = Term::agent(w.owner());
  const FactSet& zero = w.zero();
  if (f.subject == me) return true;
  if (f.relation == rel::kExplored) {
    return static_cast<int>(level_of(zero, f.subject)) > static_cast<int>(
                                                             f.object.name == "all"    ? Exploration::All
                                                             : f.object.name == "part" ? Exploration::Part
                                                                                       : Exploration::None);
  }
  if (auto item = located_item(f)) {
    if (holds_item(zero, me, *item)) return true;
    const bool at_bed = zero.count({*item, rel::kAt, cat.bed()}) > 0;
    if (at_bed && !(f.relation == rel::kAt && f.object == cat.bed())) return true;
  }
  return false;
}

void assert_all(BeliefWorld& w, const Partition& p, const std::vector<AtomicBelief>& facts,
                std::vector<std::string>& warnings) {
  std::set<Term> holders;
  for (const auto& f : facts) {
    if (f.relation == rel::kHold) holders.insert(f.subject);
  }
  const FactSet snapshot = w.facts(p);
  for (const auto& g : snapshot) {
    if (g.relation == rel::kHold && holders.count(g.subject) &&
        std::find(facts.begin(), facts.end(), g) == facts.end()) {
      w.retract(p, g);
    }
  }
  for (const auto& f : facts) {
    try {
      w.assert_fact(p, f);
    } catch (const RuleViolation& e) {
      warnings.push_back(e.what());
    }
  }
}

void check_known(const Catalog& cat, const ObjectRef& t) {
  if (!cat.knows(t)) throw CorruptObservation("observation mentions unknown entity " + sbl::to_string(t));
}

std::optional<Plan> plan_from(const std::string& text) {
  if (reasoner::is_none(text)) return std::nullopt;
  return parse_plan(text);
}

}  // namespace

std::string_view to_string(CommMode m) {
  switch (m) {
    case CommMode::Adaptive: return "adaptive";
    case CommMode::Always: return "always";
    case CommMode::Never: return "never";
  }
  return "adaptive";
}

std::optional<CommMode> comm_mode_from_string(std::string_view s) {
  if (s == "adaptive") return CommMode::Adaptive;
  if (s == "always") return CommMode::Always;
  if (s == "never") return CommMode::Never;
  return std::nullopt;
}

std::vector<std::string> update_from_visual(BeliefWorld& w, const VisualObservation& obs) {
  const Catalog& cat = catalog_of(w);
  check_known(cat, obs.room);
  for (const auto& h : obs.hands) {
    check_known(cat, h.item);
    for (const auto& c : h.contents) check_known(cat, c);
  }
  for (const auto& i : obs.items) check_known(cat, i);
  for (const auto& d : obs.delivered) check_known(cat, d);
  for (const auto& o : obs.others) {
    if (!cat.is_agent(o.name)) throw CorruptObservation("observation mentions unknown agent " + o.name);
    for (const auto& h : o.hands) {
      check_known(cat, h.item);
      for (const auto& c : h.contents) check_known(cat, c);
    }
  }

  std::vector<std::string> warnings;
  const Partition zero = Partition::zero();
  auto put = [&](const AtomicBelief& f) {
    try {
      w.assert_fact(zero, f);
    } catch (const RuleViolation& e) {
      warnings.push_back(e.what());
    }
  };
  auto set_hands = [&](const Term& agent, const std::vector<HeldItem>& hands) {
    std::set<ObjectRef> desired;
    for (const auto& h : hands) desired.insert(h.item);
    const FactSet before = w.zero();
    for (const auto& f : before) {
      if (f.relation == rel::kHold && f.subject == agent && !desired.count(f.object)) w.retract(zero, f);
    }
    for (const auto& h : hands) {
      put({agent, rel::kHold, h.item});
      if (!cat.is_container(h.item)) continue;
      const std::set<ObjectRef> inside(h.contents.begin(), h.contents.end());
      const FactSet now = w.zero();
      for (const auto& f : now) {
        if (f.relation == rel::kContain && f.subject == h.item && !inside.count(f.object)) w.retract(zero, f);
      }
      for (const auto& c : h.contents) put({h.item, rel::kContain, c});
    }
  };

  const Term me = Term::agent(w.owner());
  put({me, rel::kAt, obs.room});
  const Exploration level = std::max(level_of(w.zero(), obs.room), obs.level);
  put({obs.room, rel::kExplored, Term::state(std::string(to_string(level)))});
  set_hands(me, obs.hands);

  std::set<std::string> present;
  for (const auto& o : obs.others) {
    present.insert(o.name);
    put({Term::agent(o.name), rel::kAt, obs.room});
    set_hands(Term::agent(o.name), o.hands);
  }
  for (const auto& a : cat.agents()) {
    if (a == w.owner() || present.count(a)) continue;
    w.retract(zero, {Term::agent(a), rel::kAt, obs.room});
  }

  for (const auto& i : obs.items) put({i, rel::kIn, obs.room});
  if (obs.level == Exploration::All) {
    const std::set<ObjectRef> seen(obs.items.begin(), obs.items.end());
    const FactSet now = w.zero();
    for (const auto& f : now) {
      if (f.relation == rel::kIn && f.object == obs.room && (cat.is_target(f.subject) || cat.is_container(f.subject)) &&
          !seen.count(f.subject)) {
        w.retract(zero, f);
      }
    }
  }
  for (const auto& d : obs.delivered) put({d, rel::kAt, cat.bed()});
  return warnings;
}

MessageUpdate update_from_messages(BeliefWorld& w, const std::vector<Message>& inbox, reasoner::Reasoner& r,
                                   CallLog* calls) {
  MessageUpdate out;
  const auto collabs = w.collaborators();
  for (const auto& m : inbox) {
    if (std::find(collabs.begin(), collabs.end(), m.sender) == collabs.end()) {
      out.warnings.push_back("message from unknown sender " + m.sender + " ignored");
      continue;
    }
    Vars vars{{"AGENT_NAME", w.owner()},
              {"OPPO_NAME", m.sender},
              {"MESSAGE", m.sender + ": " + m.text},
              {"RULE", rules_text(w)}};
    const auto first = call(r, TemplateId::UpdateFirst, vars, calls);
    const auto zero = call(r, TemplateId::UpdateZero, vars, calls);
    const auto first_facts = reasoner::read_facts(first.section(1));
    auto zero_facts = reasoner::read_facts(zero.section(1));
    const auto plan = plan_from(first.section(2));

    if (first_facts.empty() && zero_facts.empty() && !plan && !planning::parse_message(m.text)) {
      out.warnings.push_back("unparseable message from " + m.sender + " ignored");
      continue;
    }
    assert_all(w, Partition::first(m.sender), first_facts, out.warnings);
    zero_facts.erase(std::remove_if(zero_facts.begin(), zero_facts.end(),
                                    [&](const AtomicBelief& f) { return contradicts_own_knowledge(w, f); }),
                     zero_facts.end());
    assert_all(w, Partition::zero(), zero_facts, out.warnings);
    out.declared[m.sender] = plan;
  }
  return out;
}

std::optional<Plan> predict_self(const BeliefWorld& w, reasoner::Reasoner& r, CallLog* calls) {
  const auto cs = w.collaborators();
  const auto resp = call(r, TemplateId::PredictZero, base_vars(w, cs.empty() ? "nobody" : cs.front()), calls);
  if (reasoner::is_none(resp.section(1))) return std::nullopt;
  if (auto p = parse_plan(resp.section(1))) return p;
  return planning::best_plan(w.zero(), w.owner(), catalog_of(w));
}

std::vector<Plan> predict_collaborator(const BeliefWorld& w, const std::string& collab, reasoner::Reasoner& r,
                                       const std::optional<Plan>& my_declared, CallLog* calls) {
  std::string beliefs = reasoner::format_beliefs(w, Partition::first(collab));
  if (my_declared) beliefs += "\n" + w.owner() + "'s declared plan: " + to_text(*my_declared);
  Vars vars{{"AGENT_NAME", w.owner()},
            {"OPPO_NAME", collab},
            {"GOAL", catalog_of(w).goal().describe()},
            {"FIRST_ORDER_BELIEF", beliefs}};
  const auto resp = call(r, TemplateId::PredictFirst, std::move(vars), calls);
  std::vector<Plan> out;
  for (std::size_t i = 2; i < 5; ++i) {
    auto p = plan_from(resp.section(i));
    if (p && std::find(out.begin(), out.end(), *p) == out.end()) out.push_back(*p);
  }
  return out;
}

MiscoordReport detect_miscoordination(const Plan& mine, const std::vector<Plan>& theirs, const BeliefWorld& w,
                                      const std::string& collab) {
  MiscoordReport rep;
  rep.conflicts = planning::find_conflicts(mine, theirs, catalog_of(w));
  rep.misaligned = w.misalignment(collab);
  rep.heavy = planning::is_heavy(rep.conflicts, rep.misaligned.facts, catalog_of(w));
  return rep;
}

MiscoordReport assess(const BeliefWorld& w, const std::string& collab, const Plan& mine,
                      const std::vector<Plan>& theirs, reasoner::Reasoner& r, CallLog* calls) {
  MiscoordReport rep = detect_miscoordination(mine, theirs, w, collab);
  Vars vars = base_vars(w, collab);
  vars["MY_FIRST_ORDER_BELIEF"] = reasoner::format_beliefs(w, Partition::first(collab));
  vars["MY_PLAN"] = to_text(mine);
  vars["OPPO_PLANS"] = reasoner::format_plans(theirs);
  const auto resp = call(r, TemplateId::Adaptive, std::move(vars), calls);
  std::string answer = resp.section(1);
  std::transform(answer.begin(), answer.end(), answer.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const bool said_yes = answer.find("yes") != std::string::npos;
  rep.heavy = said_yes && (!rep.conflicts.empty() || !rep.misaligned.empty());
  return rep;
}

std::string compose_message(const BeliefWorld& w, const std::vector<AtomicBelief>& facts,
                            const std::optional<Plan>& plan, reasoner::Reasoner& r, CallLog* calls) {
  Vars vars{{"AGENT_NAME", w.owner()},
            {"OPPO_NAME", others(w)},
            {"MISALIGNED_INFORMATION", reasoner::format_facts(facts)},
            {"MY_PLAN", reasoner::format_plan(plan)}};
  const auto resp = call(r, TemplateId::Communicate, std::move(vars), calls);
  std::string text = resp.section(0);
  if (text.empty() || text.size() > kMaxMessageChars) text = planning::compose_message(facts, plan, &catalog_of(w));
  return text;
}

planning::NextStep next_action(const BeliefWorld& w, const Plan& plan, const std::vector<AtomicAction>& history,
                               reasoner::Reasoner& r, CallLog* calls) {
  const auto cs = w.collaborators();
  Vars vars = base_vars(w, cs.empty() ? "nobody" : cs.front());
  vars["MY_PLAN"] = to_text(plan);
  std::string prev;
  for (const auto& a : history) prev += (prev.empty() ? "" : "; ") + to_text(a);
  vars["PREVIOUS_ACTIONS"] = prev.empty() ? "None" : prev;
  vars["ACTION_LIST"] = to_text(plan);
  const auto resp = call(r, TemplateId::PlanNext, std::move(vars), calls);
  const std::string& answer = resp.section(1);
  std::string upper = answer;
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper.find(reasoner::kSubplanDone) != std::string::npos) return {planning::NextStep::Kind::SubplanDone, {}, {}};
  if (upper.find(reasoner::kStalePlan) != std::string::npos) {
    return {planning::NextStep::Kind::Stale, std::nullopt, resp.section(0)};
  }
  const auto actions = parse_actions(answer);
  if (actions.empty()) return {planning::NextStep::Kind::Stale, std::nullopt, "no action in answer"};
  return {planning::NextStep::Kind::Act, actions.front(), {}};
}

std::optional<Plan> replan(const BeliefWorld& w, const std::vector<Plan>& collab_plans, reasoner::Reasoner& r,
                           CallLog* calls) {
  if (collab_plans.empty()) return predict_self(w, r, calls);
  const auto cs = w.collaborators();
  Vars vars = base_vars(w, cs.size() == 1 ? cs.front() : others(w));
  vars["OPPO_PLAN"] = reasoner::format_plans(collab_plans);
  const auto resp = call(r, TemplateId::Replan, std::move(vars), calls);
  if (reasoner::is_none(resp.section(1))) return std::nullopt;
  if (auto p = parse_plan(resp.section(1))) return p;
  return planning::replan(w.zero(), w.owner(), catalog_of(w), collab_plans);
}

Json to_json(const MiscoordReport& r) {
  Json j;
  Json conflicts = Json::array();
  for (const auto& c : r.conflicts) {
    conflicts.push_back({{"my_step", c.my_step},
                         {"their_plan", c.their_plan},
                         {"their_step", c.their_step},
                         {"kind", std::string(planning::to_string(c.kind))},
                         {"entity", sbl::to_string(c.entity)}});
  }
  j["conflicts"] = std::move(conflicts);
  Json mis = Json::array();
  for (const auto& f : r.misaligned.facts) mis.push_back(sbl::to_string(f));
  j["misaligned"] = std::move(mis);
  j["heavy"] = r.heavy;
  return j;
}

std::string belief_hash(const BeliefWorld& w) { return hex64(fnv1a64(w.snapshot())); }

CollabAgent::CollabAgent(std::string name, std::vector<std::string> collaborators, std::vector<BeliefRule> rules,
                         CatalogPtr catalog, reasoner::Reasoner& r, AgentConfig cfg)
    : world_(std::move(name), std::move(collaborators), std::move(rules), catalog),
      catalog_(std::move(catalog)),
      r_(r),
      cfg_(cfg) {}

std::vector<Plan> CollabAgent::live_declared() const {
  std::vector<Plan> out;
  for (const auto& [c, d] : declared_) out.push_back(d.plan);
  return out;
}

std::optional<AtomicAction> CollabAgent::ensure_step(CallLog& log) {
  for (int attempt = 0; attempt < 3; ++attempt) {
    if (!plan_) {
      history_.clear();
      const auto live = live_declared();
      plan_ = replan(world_, live, r_, &log);
      if (!plan_) return std::nullopt;
      if (!planning::find_conflicts(*plan_, live, *catalog_).empty()) {
        log.push_back({"defer", Json{{"plan", to_text(*plan_)}}, std::nullopt});
        plan_.reset();
        return std::nullopt;
      }
    }
    const auto step = next_action(world_, *plan_, history_, r_, &log);
    if (step.kind == planning::NextStep::Kind::Act) return step.action;
    plan_.reset();
  }
  return std::nullopt;
}

Decision CollabAgent::decide(const VisualObservation& obs, const std::vector<Message>& inbox, int frame) {
  Decision d;
  CallLog log;
  auto warn = [&](const std::string& w) { log.push_back({"warning", Json{{"message", w}}, std::nullopt}); };

  for (const auto& w : update_from_visual(world_, obs)) warn(w);
  if (!inbox.empty()) {
    auto upd = update_from_messages(world_, inbox, r_, &log);
    for (const auto& w : upd.warnings) warn(w);
    for (auto& [sender, plan] : upd.declared) {
      if (plan) {
        declared_[sender] = {*plan, frame};
      } else {
        declared_.erase(sender);
      }
    }
  }
  for (auto it = declared_.begin(); it != declared_.end();) {
    const auto st = planning::next_step(world_.zero(), it->first, *catalog_, it->second.plan, {});
    if (frame - it->second.frame > cfg_.declared_ttl || st.kind != planning::NextStep::Kind::Act) {
      it = declared_.erase(it);
    } else {
      ++it;
    }
  }
  if (plan_ && history_.empty()) {
    const auto& order = catalog_->agents();
    const auto rank = [&](const std::string& a) { return std::find(order.begin(), order.end(), a) - order.begin(); };
    for (const auto& [c, dp] : declared_) {
      if (rank(c) > rank(name())) continue;
      for (const auto& cf : planning::find_conflicts(*plan_, {dp.plan}, *catalog_)) {
        if (cf.my_step == 0 && cf.their_step == 0) plan_.reset();
      }
      if (!plan_) {
        log.push_back({"yield", Json{{"to", c}, {"their_plan", to_text(dp.plan)}}, std::nullopt});
        break;
      }
    }
  }

  if (!in_tick_) {
    ++tick_;
    in_tick_ = true;
  }

  auto step = ensure_step(log);
  if (!step) {
    d.kind = Decision::Kind::Wait;
    d.wait_frames = cfg_.idle_recheck;
    d.events = std::move(log);
    d.events.push_back({"wait", Json{{"tick", tick_}}, std::nullopt});
    return d;
  }

  const std::optional<Plan> my_told = (told_ && told_ == plan_) ? told_ : std::nullopt;
  std::vector<std::pair<std::string, MiscoordReport>> reports;
  std::vector<Plan> conflicting;
  bool heavy = false;
  for (const auto& c : world_.collaborators()) {
    std::vector<Plan> theirs;
    if (auto it = declared_.find(c); it != declared_.end()) {
      theirs.push_back(it->second.plan);
    } else {
      theirs = predict_collaborator(world_, c, r_, my_told, &log);
    }
    auto rep = assess(world_, c, *plan_, theirs, r_, &log);
    heavy = heavy || rep.heavy;
    for (const auto& cf : rep.conflicts) {
      if (cf.my_step == 0 && cf.their_step == 0) conflicting.push_back(theirs[cf.their_plan]);
    }
    Json p;
    p["tick"] = tick_;
    p["collaborator"] = c;
    Json plans = Json::array();
    for (const auto& t : theirs) plans.push_back(to_text(t));
    p["their_plans"] = std::move(plans);
    p["my_plan"] = to_text(*plan_);
    const Json rj = to_json(rep);
    for (const auto& [k, v] : rj.items()) p[k] = v;
    log.push_back({"report", std::move(p), std::nullopt});
    reports.emplace_back(c, std::move(rep));
  }

  bool communicate = false;
  switch (cfg_.mode) {
    case CommMode::Always: communicate = last_comm_tick_ != tick_; break;
    case CommMode::Adaptive: communicate = heavy && tick_ - last_comm_tick_ >= cfg_.cooldown; break;
    case CommMode::Never: break;
  }

  if (communicate) {
    if (!conflicting.empty()) {
      auto avoid = conflicting;
      for (const auto& p : live_declared()) avoid.push_back(p);
      if (auto fresh = replan(world_, avoid, r_, &log); fresh && fresh != plan_) {
        plan_ = fresh;
        history_.clear();
      }
    }
    std::set<AtomicBelief> mis;
    for (const auto& c : world_.collaborators()) {
      for (const auto& f : world_.misalignment(c).facts) mis.insert(f);
    }
    std::vector<AtomicBelief> facts(mis.begin(), mis.end());
    std::sort(facts.begin(), facts.end(), canonical_less);
    const std::string text = compose_message(world_, facts, plan_, r_, &log);

    std::vector<AtomicBelief> sent;
    if (auto parsed = planning::parse_message(text)) {
      sent = parsed->facts;
    } else {
      sent = reasoner::read_facts(text);
    }
    std::vector<std::string> sync_warnings;
    for (const auto& c : world_.collaborators()) assert_all(world_, Partition::first(c), sent, sync_warnings);
    for (const auto& w : sync_warnings) warn(w);
    told_ = plan_;
    last_comm_tick_ = tick_;

    Json p;
    p["tick"] = tick_;
    p["text"] = text;
    p["chars"] = text.size();
    p["tokens"] = count_tokens(text);
    log.push_back({"communicate", std::move(p), belief_hash(world_)});
    d.kind = Decision::Kind::Communicate;
    d.message = text;
    d.events = std::move(log);
    return d;
  }

  Json p;
  p["tick"] = tick_;
  p["action"] = to_text(*step);
  p["plan"] = to_text(*plan_);
  p["heavy"] = heavy;
  log.push_back({"act", std::move(p), belief_hash(world_)});
  in_tick_ = false;
  d.kind = Decision::Kind::Act;
  d.action = *step;
  d.events = std::move(log);
  return d;
}

std::vector<Event> CollabAgent::on_result(const ActionResult& res) {
  std::vector<Event> out;
  if (!res.action) return out;
  const bool physical = res.action->type != ActionType::SendMessage;
  if (res.status == ActionResult::Status::Completed && physical) {
    history_.push_back(*res.action);
  } else if (res.status == ActionResult::Status::Rejected) {
    if (res.action->type == ActionType::GoGrasp) {
      const FactSet now = world_.zero();
      for (const auto& f : now) {
        if (f.relation == rel::kIn && f.subject == res.action->target) world_.retract(Partition::zero(), f);
      }
    }
    plan_.reset();
    history_.clear();
  }
  if (res.status == ActionResult::Status::Completed || res.status == ActionResult::Status::Rejected) {
    Json p;
    p["status"] = std::string(to_string(res.status));
    p["action"] = res.action->type == ActionType::SendMessage ? std::string("send message") : to_text(*res.action);
    if (!res.reason.empty()) p["reason"] = res.reason;
    out.push_back({"result", std::move(p), std::nullopt});
  }
  return out;
}

}  // namespace cobel
