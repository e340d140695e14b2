#pragma once

// The line protocol: command parsing, transactional execution against a
// store, response formatting and change-event delivery.
//
//   command  := VERB (SP token)* LF
//   response := seq SP ("OK" (SP token)* | "ERR" SP code SP qstring) LF
//   event    := "EVT" SP txId SP seqInTx SP op SP elementId (SP token)* LF

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qmod/store.hpp"
#include "qmod/transform.hpp"

namespace qmod {

enum class Verb : std::uint8_t {
  CREATE,
  READ,
  UPDATE,
  DELETE,
  INSTANTIATE,
  RETYPE,
  REFLECT,
  LIST,
  BEGIN,
  COMMIT,
  ROLLBACK,
  CHECK,
  TRANSFORM,
  SAVE,
  LOAD,
  SUBSCRIBE,
};

std::string_view to_string(Verb v);
std::optional<Verb> verb_from_string(std::string_view s);
bool is_mutating(Verb v);

struct Command {
  Verb verb;
  std::vector<Token> args;
};

/// Total over its input: returns a command or throws Error(PARSE_ERROR) whose
/// message starts with the column of the first offending byte.
Command parse(std::string_view line);

/// Lines that carry no command: empty, whitespace only, or starting with '#'.
bool is_blank_or_comment(std::string_view line);

struct Response {
  std::uint64_t seq = 0;
  bool ok = true;
  std::vector<std::string> tokens;  // OK payload, already encoded
  Code code = Code::PARSE_ERROR;    // ERR only
  std::string message;              // ERR only

  std::string to_line() const;  // without the trailing LF
  static Response error(std::uint64_t seq, const Error& e);
};

struct ChangeEvent {
  std::uint64_t tx = 0;
  std::uint64_t seq_in_tx = 0;
  std::string op;
  ElementId element;
  std::vector<std::string> details;

  std::string to_line() const;
};

struct SessionOptions {
  std::size_t event_capacity = 4096;  // pending events per subscription
};

class Session {
 public:
  explicit Session(Store store = Store{}, SessionOptions options = {});

  /// Executes one input line. Returns the response line followed by any
  /// event lines that became deliverable; blank and comment lines yield
  /// nothing and do not consume a sequence number.
  std::vector<std::string> execute_line(std::string_view line);

  /// Executes an already parsed command with the next sequence number.
  Response execute(const Command& cmd);

  /// Pending lines for every open subscription, in commit order, including a
  /// seq-0 EVENT_OVERFLOW error for a subscription that was closed.
  std::vector<std::string> drain_events();

  const Store& committed() const { return committed_; }
  const Store& view() const { return working_ ? *working_ : committed_; }
  bool in_transaction() const { return working_.has_value(); }
  std::uint64_t last_seq() const { return seq_; }
  std::uint64_t commits() const { return tx_; }

  /// Replaces the committed store; only valid outside a transaction.
  void reset(Store store);

 private:
  struct Subscription {
    std::deque<std::string> pending;
    bool open = true;
    bool overflowed = false;
  };

  Response dispatch(std::uint64_t seq, const Command& cmd);
  std::vector<std::string> apply_mutation(Store& store, const Command& cmd);
  std::vector<std::string> query(const Store& store, const Command& cmd) const;
  // Runs the commit gate on `store`; on success it becomes the committed
  // state and its journal is published after `steps`.
  void commit(Store store, const std::vector<StepEvent>& steps = {});
  void publish(const std::vector<ChangeEvent>& events);

  Store committed_;
  std::optional<Store> working_;
  SessionOptions options_;
  std::uint64_t seq_ = 0;
  std::uint64_t tx_ = 0;
  std::uint64_t next_subscriber_ = 1;
  std::map<std::uint64_t, Subscription> subscriptions_;
};

}  // namespace qmod
