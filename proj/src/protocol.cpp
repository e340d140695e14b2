#include "qmod/protocol.hpp"

#include <array>
#include <charconv>

#include "qmod/constraints.hpp"
#include "qmod/persist.hpp"

namespace qmod {
namespace {

constexpr std::array<std::string_view, 16> kVerbNames = {
    "CREATE", "READ",     "UPDATE", "DELETE",    "INSTANTIATE", "RETYPE", "REFLECT", "LIST",
    "BEGIN",  "COMMIT",   "ROLLBACK", "CHECK",   "TRANSFORM",   "SAVE",   "LOAD",    "SUBSCRIBE",
};

[[noreturn]] void parse_fail(std::size_t column, const std::string& why) {
  throw Error(Code::PARSE_ERROR, {std::to_string(column), why});
}

std::uint64_t id_arg(const Token& t) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
  if (t.quoted || t.text.empty() || ec != std::errc() || p != t.text.data() + t.text.size())
    parse_fail(t.column, "expected an element id, got " + encode_token(t.text));
  return v;
}

ElementId eid(const Token& t) { return ElementId(id_arg(t)); }

ElementKind kind_arg(const Token& t) {
  auto k = t.quoted ? std::nullopt : kind_from_string(t.text);
  if (!k) parse_fail(t.column, "unknown element kind " + encode_token(t.text));
  return *k;
}

Value value_arg(const Token& t) {
  auto v = parse_literal(t);
  if (!v) parse_fail(t.column, "malformed literal " + encode_token(t.text));
  return *v;
}

void arity(const Command& c, std::size_t line_end, std::size_t min, std::size_t max) {
  if (c.args.size() < min) parse_fail(line_end, std::string(to_string(c.verb)) + " needs more arguments");
  if (c.args.size() > max) parse_fail(c.args[max].column, "unexpected argument");
}

}  // namespace

std::string_view to_string(Verb v) { return kVerbNames[static_cast<std::size_t>(v)]; }

std::optional<Verb> verb_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kVerbNames.size(); ++i) {
    if (kVerbNames[i] == s) return static_cast<Verb>(i);
  }
  return std::nullopt;
}

bool is_mutating(Verb v) {
  switch (v) {
    case Verb::CREATE:
    case Verb::UPDATE:
    case Verb::DELETE:
    case Verb::INSTANTIATE:
    case Verb::RETYPE: return true;
    default: return false;
  }
}

bool is_blank_or_comment(std::string_view line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string_view::npos || line[first] == '#';
}

Command parse(std::string_view line) {
  std::vector<Token> toks;
  try {
    toks = tokenize(line);
  } catch (const TokenizeError& e) {
    parse_fail(e.column, e.reason);
  }
  if (toks.empty()) parse_fail(0, "empty command");
  auto verb = toks[0].quoted ? std::nullopt : verb_from_string(toks[0].text);
  if (!verb) parse_fail(toks[0].column, "unknown verb " + encode_token(toks[0].text));
  Command c{*verb, std::vector<Token>(toks.begin() + 1, toks.end())};
  const std::size_t end = line.size();
  const auto& a = c.args;
  switch (c.verb) {
    case Verb::CREATE: {
      arity(c, end, 3, 6);
      const ElementKind k = kind_arg(a[0]);
      id_arg(a[1]);
      if (k == ElementKind::LinkOccurrence) {
        arity(c, end, 6, 6);
        for (std::size_t i = 3; i < 6; ++i) id_arg(a[i]);
      } else {
        arity(c, end, 3, 3);
      }
      break;
    }
    case Verb::READ:
      arity(c, end, 2, 2);
      id_arg(a[0]);
      break;
    case Verb::UPDATE:
      arity(c, end, 4, 4);
      id_arg(a[0]);
      if (a[2].quoted || a[2].text.empty() || a[2].text.find_first_not_of("0123456789") != std::string::npos)
        parse_fail(a[2].column, "expected an index, got " + encode_token(a[2].text));
      id_arg(a[2]);
      value_arg(a[3]);
      break;
    case Verb::DELETE:
    case Verb::REFLECT:
      arity(c, end, 1, 1);
      id_arg(a[0]);
      break;
    case Verb::INSTANTIATE:
      arity(c, end, 3, 3);
      id_arg(a[0]);
      id_arg(a[1]);
      break;
    case Verb::RETYPE:
      arity(c, end, 2, 2);
      id_arg(a[0]);
      id_arg(a[1]);
      break;
    case Verb::LIST:
      arity(c, end, 1, 2);
      kind_arg(a[0]);
      if (a.size() == 2) id_arg(a[1]);
      break;
    case Verb::BEGIN:
    case Verb::COMMIT:
    case Verb::ROLLBACK:
    case Verb::SUBSCRIBE: arity(c, end, 0, 0); break;
    case Verb::CHECK:
      arity(c, end, 0, 1);
      if (a.size() == 1) id_arg(a[0]);
      break;
    case Verb::TRANSFORM:
      arity(c, end, 2, 3);
      id_arg(a[0]);
      id_arg(a[1]);
      if (a.size() == 3 && (a[2].quoted || a[2].text != "debug")) parse_fail(a[2].column, "expected debug");
      break;
    case Verb::SAVE:
    case Verb::LOAD:
      arity(c, end, 1, 1);
      if (a[0].text.empty()) parse_fail(a[0].column, "empty path");
      break;
  }
  return c;
}

std::string Response::to_line() const {
  std::string out = std::to_string(seq);
  if (ok) {
    out += " OK";
    for (const auto& t : tokens) out += " " + t;
  } else {
    out += " ERR ";
    out += to_string(code);
    out += " " + quote(message);
  }
  return out;
}

Response Response::error(std::uint64_t seq, const Error& e) {
  Response r;
  r.seq = seq;
  r.ok = false;
  r.code = e.code();
  r.message = e.what();
  return r;
}

std::string ChangeEvent::to_line() const {
  std::string out = "EVT " + std::to_string(tx) + " " + std::to_string(seq_in_tx) + " " + op + " " + to_string(element);
  for (const auto& d : details) out += " " + d;
  return out;
}

// ---------------------------------------------------------------------------
// Session
// ---------------------------------------------------------------------------

Session::Session(Store store, SessionOptions options) : committed_(std::move(store)), options_(options) {
  committed_.take_journal();
}

void Session::reset(Store store) {
  working_.reset();
  committed_ = std::move(store);
  committed_.take_journal();
}

std::vector<std::string> Session::execute_line(std::string_view line) {
  if (is_blank_or_comment(line)) return {};
  const std::uint64_t seq = ++seq_;
  Response r;
  try {
    r = dispatch(seq, parse(line));
  } catch (const Error& e) {
    r = Response::error(seq, e);
  }
  std::vector<std::string> out{r.to_line()};
  for (auto& l : drain_events()) out.push_back(std::move(l));
  return out;
}

Response Session::execute(const Command& cmd) {
  const std::uint64_t seq = ++seq_;
  try {
    return dispatch(seq, cmd);
  } catch (const Error& e) {
    return Response::error(seq, e);
  }
}

Response Session::dispatch(std::uint64_t seq, const Command& cmd) {
  Response r;
  r.seq = seq;
  const auto& a = cmd.args;
  switch (cmd.verb) {
    case Verb::BEGIN:
      if (working_) throw Error(Code::TX_NESTED, {});
      working_ = committed_;
      return r;
    case Verb::COMMIT: {
      if (!working_) throw Error(Code::TX_NONE, {});
      Store s = std::move(*working_);
      working_.reset();
      commit(std::move(s));
      return r;
    }
    case Verb::ROLLBACK:
      if (!working_) throw Error(Code::TX_NONE, {});
      working_.reset();
      return r;
    case Verb::SUBSCRIBE: {
      const std::uint64_t id = next_subscriber_++;
      subscriptions_[id];
      r.tokens.push_back(std::to_string(id));
      return r;
    }
    case Verb::SAVE:
      if (working_) throw Error(Code::TX_OPEN, {});
      r.tokens.push_back(save_file(committed_, a[0].text));
      return r;
    case Verb::LOAD: {
      if (working_) throw Error(Code::TX_OPEN, {});
      Store loaded = load_file(a[0].text);
      r.tokens.push_back(digest(loaded));
      committed_ = std::move(loaded);
      return r;
    }
    case Verb::TRANSFORM: {
      if (working_) throw Error(Code::TX_OPEN, {});
      Store s = committed_;
      const bool debug = a.size() == 3;
      TransformResult t = execute_transformation(s, eid(a[0]), eid(a[1]), debug);
      commit(std::move(s), t.steps);
      r.tokens = {to_string(t.target_root), to_string(t.trace)};
      return r;
    }
    default: break;
  }
  if (is_mutating(cmd.verb)) {
    if (working_) {
      r.tokens = apply_mutation(*working_, cmd);
    } else {
      Store s = committed_;
      r.tokens = apply_mutation(s, cmd);
      commit(std::move(s));
    }
    return r;
  }
  r.tokens = query(view(), cmd);
  return r;
}

std::vector<std::string> Session::apply_mutation(Store& store, const Command& cmd) {
  const auto& a = cmd.args;
  switch (cmd.verb) {
    case Verb::CREATE: {
      const ElementKind kind = *kind_from_string(a[0].text);
      std::optional<std::array<ElementId, 3>> link;
      if (kind == ElementKind::LinkOccurrence) link = std::array{eid(a[3]), eid(a[4]), eid(a[5])};
      return {to_string(store.create(kind, eid(a[1]), a[2].text, link))};
    }
    case Verb::UPDATE:
      store.update(eid(a[0]), a[1].text, static_cast<std::size_t>(id_arg(a[2])), value_arg(a[3]));
      return {};
    case Verb::DELETE: store.remove(eid(a[0])); return {};
    case Verb::INSTANTIATE: return {to_string(store.instantiate(eid(a[0]), eid(a[1]), a[2].text))};
    case Verb::RETYPE: store.retype(eid(a[0]), eid(a[1])); return {};
    default: return {};
  }
}

std::vector<std::string> Session::query(const Store& store, const Command& cmd) const {
  const auto& a = cmd.args;
  std::vector<std::string> out;
  switch (cmd.verb) {
    case Verb::READ:
      for (const Value& v : store.read(eid(a[0]), a[1].text)) out.push_back(format_value(v));
      break;
    case Verb::REFLECT: out = to_tokens(store.reflect(eid(a[0]))); break;
    case Verb::LIST: {
      const ElementId filter = a.size() == 2 ? eid(a[1]) : kNoElement;
      for (ElementId id : store.list(*kind_from_string(a[0].text), filter)) out.push_back(to_string(id));
      break;
    }
    case Verb::CHECK: {
      const ElementId scope = a.empty() ? kNoElement : eid(a[0]);
      for (const Violation& v : evaluate(store, scope)) {
        out.push_back(std::string(to_string(v.code)) + ":" + to_string(v.element) + ":" + to_string(v.constraint));
      }
      break;
    }
    default: break;
  }
  return out;
}

void Session::commit(Store store, const std::vector<StepEvent>& steps) {
  if (auto v = enforce_at_commit(store.journal(), store); !v.empty())
    throw Error(Code::VALIDATION_FAILED, {summarize(v)});
  const std::vector<Change> changes = store.take_journal();
  committed_ = std::move(store);
  const std::uint64_t tx = ++tx_;
  std::vector<ChangeEvent> events;
  std::uint64_t n = 0;
  for (const StepEvent& s : steps) events.push_back({tx, ++n, s.op, s.element, s.details});
  for (const Change& c : changes) events.push_back({tx, ++n, std::string(to_string(c.op)), c.element, c.details});
  publish(events);
}

void Session::publish(const std::vector<ChangeEvent>& events) {
  if (events.empty()) return;
  for (auto& [id, sub] : subscriptions_) {
    if (!sub.open) continue;
    if (sub.pending.size() + events.size() > options_.event_capacity) {
      sub.open = false;
      sub.overflowed = true;
      sub.pending.clear();
      continue;
    }
    for (const ChangeEvent& e : events) sub.pending.push_back(e.to_line());
  }
}

std::vector<std::string> Session::drain_events() {
  std::vector<std::string> out;
  for (auto it = subscriptions_.begin(); it != subscriptions_.end();) {
    auto& sub = it->second;
    for (auto& l : sub.pending) out.push_back(std::move(l));
    sub.pending.clear();
    if (sub.overflowed) {
      Response r = Response::error(
          0, Error(Code::EVENT_OVERFLOW, {std::to_string(it->first), std::to_string(options_.event_capacity)}));
      out.push_back(r.to_line());
      it = subscriptions_.erase(it);
    } else {
      ++it;
    }
  }
  return out;
}

}  // namespace qmod
