#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "secfpga/arch.hpp"
#include "secfpga/error.hpp"
#include "secfpga/plbmap.hpp"
#include "secfpga/rr_graph.hpp"
#include "secfpga/text.hpp"

namespace secfpga {

using TimePs = std::int64_t;

// Initialization did not reach every stage. `stage()` is 1-based.
class IncompleteResetError : public Error {
public:
  explicit IncompleteResetError(std::size_t stage)
      : Error("incomplete reset: stage " + std::to_string(stage) + " not reset"), stage_(stage) {}
  std::size_t stage() const noexcept { return stage_; }

private:
  std::size_t stage_;
};

// The handshake stalled with symbols still to deliver.
class DeadlockError : public Error {
public:
  DeadlockError(std::size_t stage, TimePs time)
      : Error("handshake deadlock at stage " + std::to_string(stage) + ", t=" + std::to_string(time) + " ps"),
        stage_(stage), time_(time) {}
  std::size_t stage() const noexcept { return stage_; }
  TimePs time() const noexcept { return time_; }

private:
  std::size_t stage_;
  TimePs time_;
};

/// 4-phase encoding: each bit becomes a valid codeword followed by a Null spacer.
inline std::vector<DualRailValue> encode_4phase(const std::vector<bool>& bits) {
  std::vector<DualRailValue> out;
  out.reserve(bits.size() * 2);
  for (bool b : bits) {
    out.push_back(b ? DualRailValue::One : DualRailValue::Zero);
    out.push_back(DualRailValue::Null);
  }
  return out;
}

inline std::vector<bool> decode_4phase(const std::vector<DualRailValue>& symbols) {
  std::vector<bool> bits;
  bool expect_valid = true;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const auto v = symbols[i];
    if (v == DualRailValue::Invalid) throw ProtocolError(i, "invalid codeword");
    if (expect_valid != is_valid(v)) throw ProtocolError(i, expect_valid ? "missing valid symbol" : "missing Null spacer");
    if (expect_valid) bits.push_back(v == DualRailValue::One);
    expect_valid = !expect_valid;
  }
  if (!expect_valid) throw ProtocolError(symbols.size(), "stream ends without a Null spacer");
  return bits;
}

struct ChainStage {
  DualRailValue value = DualRailValue::Null;
  bool ack = true; // 1 = READY
};

/// Full-buffer chain. Stage j ends up holding bit N-1-j of the stream, so
/// image index i maps to stage N-1-i. `lut_group` names the LUT a stage's
/// memory point belongs to (-1: not a LUT bit).
struct ChainState {
  std::vector<ChainStage> stages;
  std::vector<int> lut_group;
  bool init = true;

  std::size_t size() const { return stages.size(); }
  bool clean() const {
    for (const auto& s : stages)
      if (s.value != DualRailValue::Null || !s.ack) return false;
    return true;
  }
};

/// Bare chain of n LUT memory points, 64 per LUT.
inline ChainState make_chain(std::size_t n) {
  ChainState c;
  c.stages.resize(n);
  c.lut_group.resize(n);
  for (std::size_t j = 0; j < n; ++j) c.lut_group[j] = static_cast<int>((n - 1 - j) / 64);
  return c;
}

/// Chain for a fabric, one stage per configuration bit in traversal order.
inline ChainState make_chain(const RrGraph& g) {
  const auto& bits = g.config_bits();
  const std::size_t n = bits.size();
  ChainState c;
  c.stages.resize(n);
  c.lut_group.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = bits[i];
    if (b.kind == ConfigBitKind::PlbInternal && b.local < plb_lut_bits)
      c.lut_group[n - 1 - i] = b.block * (plb_lut_bits / 64) + b.local / 64;
  }
  return c;
}

struct ChainTiming {
  TimePs forward_ps = 184;   // latch delay
  TimePs precharge_ps = 132; // output reset and acknowledge return
  TimePs rail1_extra_ps = 0; // extra latch delay on DATA1, which also drives the switches
  TimePs env_delay_ps = 0;   // feeder response to an acknowledge
  TimePs symbol_period_ps = 0; // minimum spacing between valid symbols from the feeder

  void validate() const {
    if (forward_ps <= 0 || precharge_ps <= 0) throw ValidationError("stage delays must be positive");
    if (rail1_extra_ps < 0 || env_delay_ps < 0 || symbol_period_ps < 0)
      throw ValidationError("timing offsets must be non-negative");
  }
};

/// Transmission-gate fault: while a symbol period is below the threshold, every
/// '1' latched into a LUT memory point disturbs a neighbouring point of the same
/// LUT, forcing its DATA1 rail high.
struct TgBugModel {
  bool enabled = false;
  TimePs threshold_ps = -1; // < 0: twice the forward latency

  TimePs threshold(const ChainTiming& t) const { return threshold_ps < 0 ? 2 * t.forward_ps : threshold_ps; }
  bool active(const ChainTiming& t) const { return enabled && t.symbol_period_ps < threshold(t); }
};

enum class CorruptionKind { Overwrite, Transient };

struct CorruptionEvent {
  TimePs time = 0;
  std::size_t stage = 0;    // stage that latched the '1'
  std::size_t neighbor = 0; // disturbed memory point
  CorruptionKind kind = CorruptionKind::Transient;
};

/// Boundary keeps the feeder, stage 0 and corruption events.
enum class ChainLog { None, Boundary, Full };

enum class ChainEventKind { Latch, Reset, AckFall, AckRise, FeedValid, FeedNull, Corrupt };

inline std::string_view to_string(ChainEventKind k) {
  switch (k) {
  case ChainEventKind::Latch: return "latch";
  case ChainEventKind::Reset: return "reset";
  case ChainEventKind::AckFall: return "ack_fall";
  case ChainEventKind::AckRise: return "ack_rise";
  case ChainEventKind::FeedValid: return "feed_valid";
  case ChainEventKind::FeedNull: return "feed_null";
  case ChainEventKind::Corrupt: return "corrupt";
  }
  return "?";
}

struct ChainEvent {
  TimePs time = 0;
  int stage = 0; // -1: feeder
  ChainEventKind kind = ChainEventKind::Latch;
  DualRailValue value = DualRailValue::Null;
};

struct LoadReport {
  std::size_t ack_count = 0;
  std::vector<DualRailValue> image; // image[i] = stage N-1-i
  TimePs elapsed_ps = 0;            // time of the last acknowledge
  std::vector<CorruptionEvent> corruption;
  std::vector<ChainEvent> log; // filled only when requested

  double rate_ghz() const {
    return elapsed_ps > 0 ? static_cast<double>(ack_count) / (static_cast<double>(elapsed_ps) / 1000.0) : 0.0;
  }
  /// True when the first bits.size() image entries equal the stream.
  bool exact(const std::vector<bool>& bits) const {
    if (bits.size() > image.size()) return false;
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (image[i] != (bits[i] ? DualRailValue::One : DualRailValue::Zero)) return false;
    return true;
  }
};

/// Drives INIT low with Null inputs for `hold_ps`. The Null wave reaches stage k
/// after (k+1) forward latencies; stages it does not reach keep their power-up state.
inline ChainState initialize_chain(ChainState s, TimePs hold_ps, const ChainTiming& t = {}) {
  t.validate();
  for (std::size_t k = 0; k < s.size(); ++k)
    if (static_cast<TimePs>(k + 1) * t.forward_ps <= hold_ps) s.stages[k] = ChainStage{};
  for (std::size_t k = 0; k < s.size(); ++k)
    if (s.stages[k].value != DualRailValue::Null || !s.stages[k].ack) throw IncompleteResetError(k + 1);
  s.init = true;
  return s;
}

namespace detail {

class ChainSim {
public:
  ChainSim(const ChainState& s, const std::vector<bool>& bits, const ChainTiming& t, const TgBugModel& bug,
           ChainLog log)
      : n_(s.size()), groups_(s.lut_group), bits_(bits), t_(t), bug_active_(bug.active(t)), log_(log),
        out_(n_, DualRailValue::Null), ack_(n_, 1), pend_out_(n_, 0), pend_ack_(n_, 0) {}

  LoadReport run() {
    evaluate_feeder(0);
    while (!pq_.empty()) {
      const Ev e = pq_.top();
      pq_.pop();
      now_ = e.time;
      fire(e);
    }
    if (report_.ack_count < bits_.size()) {
      std::size_t k = 0;
      while (k < n_ && !(input(k) != DualRailValue::Null && out_[k] != DualRailValue::Null)) ++k;
      throw DeadlockError(k < n_ ? k : n_ - 1, now_);
    }
    report_.image.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) report_.image[i] = out_[n_ - 1 - i];
    return std::move(report_);
  }

private:
  enum class Kind : std::uint8_t { Latch, Reset, AckRise, FeedValid, FeedNull };
  struct Ev {
    TimePs time;
    long stage;
    std::uint64_t seq;
    Kind kind;
    bool operator>(const Ev& o) const {
      if (time != o.time) return time > o.time;
      if (stage != o.stage) return stage > o.stage;
      return seq > o.seq;
    }
  };

  DualRailValue input(std::size_t k) const { return k == 0 ? feed_ : out_[k - 1]; }
  bool succ_ack(std::size_t k) const { return k + 1 == n_ ? true : ack_[k + 1]; } // the cap acknowledges while INIT = 1

  void push(TimePs time, long stage, Kind k) { pq_.push({time, stage, seq_++, k}); }

  void record(int stage, ChainEventKind k, DualRailValue v) {
    if (log_ == ChainLog::Full || (log_ == ChainLog::Boundary && (stage <= 0 || k == ChainEventKind::Corrupt)))
      report_.log.push_back({now_, stage, k, v});
  }

  bool latch_enabled(std::size_t k) const {
    return out_[k] == DualRailValue::Null && ack_[k] && input(k) != DualRailValue::Null && succ_ack(k);
  }
  bool reset_enabled(std::size_t k) const { return out_[k] != DualRailValue::Null && !succ_ack(k); }
  bool ack_enabled(std::size_t k) const { return !ack_[k] && input(k) == DualRailValue::Null; }

  void evaluate(long k) {
    if (k < 0) return evaluate_feeder(now_);
    if (k >= static_cast<long>(n_)) return;
    const auto i = static_cast<std::size_t>(k);
    if (!pend_out_[i]) {
      if (latch_enabled(i)) {
        pend_out_[i] = 1;
        push(now_ + t_.forward_ps + (rail1(input(i)) ? t_.rail1_extra_ps : 0), k, Kind::Latch);
      } else if (reset_enabled(i)) {
        pend_out_[i] = 1;
        push(now_ + t_.precharge_ps, k, Kind::Reset);
      }
    }
    if (!pend_ack_[i] && ack_enabled(i)) {
      pend_ack_[i] = 1;
      push(now_ + t_.precharge_ps, k, Kind::AckRise);
    }
  }

  void evaluate_feeder(TimePs now) {
    if (pend_feed_ || n_ == 0) return;
    if (feed_ == DualRailValue::Null && ack_[0] && next_ < bits_.size()) {
      pend_feed_ = true;
      const TimePs earliest = next_ == 0 ? now : last_valid_ + t_.symbol_period_ps;
      push(std::max(now, earliest), -1, Kind::FeedValid);
    } else if (feed_ != DualRailValue::Null && !ack_[0]) {
      pend_feed_ = true;
      push(now + t_.env_delay_ps, -1, Kind::FeedNull);
    }
  }

  void fire(const Ev& e) {
    if (e.stage < 0) {
      pend_feed_ = false;
      if (e.kind == Kind::FeedValid) {
        feed_ = bits_[next_++] ? DualRailValue::One : DualRailValue::Zero;
        last_valid_ = now_;
        record(-1, ChainEventKind::FeedValid, feed_);
      } else {
        feed_ = DualRailValue::Null;
        record(-1, ChainEventKind::FeedNull, feed_);
      }
      evaluate(0);
      evaluate_feeder(now_);
      return;
    }
    const auto k = static_cast<std::size_t>(e.stage);
    const int sk = static_cast<int>(e.stage);
    switch (e.kind) {
    case Kind::Latch:
      pend_out_[k] = 0;
      if (!latch_enabled(k)) break;
      out_[k] = input(k);
      ack_[k] = 0;
      record(sk, ChainEventKind::Latch, out_[k]);
      record(sk, ChainEventKind::AckFall, out_[k]);
      if (k == 0) {
        ++report_.ack_count;
        report_.elapsed_ps = now_;
      }
      if (bug_active_ && rail1(out_[k])) disturb(k);
      break;
    case Kind::Reset:
      pend_out_[k] = 0;
      if (!reset_enabled(k)) break;
      out_[k] = DualRailValue::Null;
      record(sk, ChainEventKind::Reset, out_[k]);
      break;
    case Kind::AckRise:
      pend_ack_[k] = 0;
      if (!ack_enabled(k)) break;
      ack_[k] = 1;
      record(sk, ChainEventKind::AckRise, out_[k]);
      break;
    default:
      break;
    }
    evaluate(e.stage - 1);
    evaluate(e.stage);
    evaluate(e.stage + 1);
  }

  void disturb(std::size_t k) {
    const int g = groups_[k];
    if (g < 0) return;
    std::size_t nb;
    if (k + 1 < n_ && groups_[k + 1] == g) nb = k + 1;
    else if (k > 0 && groups_[k - 1] == g) nb = k - 1;
    else return;
    CorruptionEvent ev{now_, k, nb, CorruptionKind::Transient};
    if (out_[nb] == DualRailValue::Zero) {
      out_[nb] = DualRailValue::Invalid;
      ev.kind = CorruptionKind::Overwrite;
    }
    report_.corruption.push_back(ev);
    record(static_cast<int>(nb), ChainEventKind::Corrupt, out_[nb]);
  }

  std::size_t n_;
  const std::vector<int>& groups_;
  const std::vector<bool>& bits_;
  ChainTiming t_;
  bool bug_active_;
  ChainLog log_;
  std::vector<DualRailValue> out_;
  std::vector<char> ack_;
  std::vector<char> pend_out_, pend_ack_;
  bool pend_feed_ = false;
  DualRailValue feed_ = DualRailValue::Null;
  std::size_t next_ = 0;
  TimePs last_valid_ = 0;
  TimePs now_ = 0;
  std::uint64_t seq_ = 0;
  std::priority_queue<Ev, std::vector<Ev>, std::greater<>> pq_;
  LoadReport report_;
};

} // namespace detail

/// Streams `bits` into an initialized chain with INIT = 1 and the bug model
/// applied. Every accepted symbol produces one acknowledge at the chain input.
inline LoadReport load_with_bug(const ChainState& s, const std::vector<bool>& bits, const ChainTiming& t,
                                const TgBugModel& bug, ChainLog log = ChainLog::None) {
  t.validate();
  if (!s.clean()) throw PreconditionError("configuration chain must be initialized before loading");
  if (bits.empty()) {
    LoadReport r;
    r.image.assign(s.size(), DualRailValue::Null);
    return r;
  }
  return detail::ChainSim(s, bits, t, bug, log).run();
}

inline LoadReport load_bitstream(const ChainState& s, const std::vector<bool>& bits, const ChainTiming& t = {},
                                 ChainLog log = ChainLog::None) {
  return load_with_bug(s, bits, t, TgBugModel{}, log);
}

inline std::string event_log_csv(const std::vector<ChainEvent>& log) {
  std::ostringstream os;
  os << "time_ps,stage,event_kind,value\n";
  for (const auto& e : log)
    os << e.time << ',' << e.stage << ',' << to_string(e.kind) << ',' << to_string(e.value) << '\n';
  return os.str();
}

// Bitstream file: `arch_hash=<hex>` header, then the bits as '0'/'1' characters.
struct Bitstream {
  std::string arch_hash;
  std::vector<bool> bits;
};

inline std::string to_text(const Bitstream& b) {
  std::string s = "arch_hash=" + b.arch_hash + "\n";
  s.reserve(s.size() + b.bits.size() + 1);
  for (bool v : b.bits) s += v ? '1' : '0';
  s += '\n';
  return s;
}

inline Bitstream parse_bitstream(std::istream& in, const std::string& name = "<bitstream>") {
  Bitstream b;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(strip_comment(line));
    if (t.empty()) continue;
    if (!header) {
      if (t.rfind("arch_hash=", 0) != 0) throw ParseError(name, lineno, "expected arch_hash=<hex> header");
      b.arch_hash = std::string(t.substr(10));
      header = true;
      continue;
    }
    for (char c : t) {
      if (c != '0' && c != '1') throw ParseError(name, lineno, "bitstream holds a character other than 0/1");
      b.bits.push_back(c == '1');
    }
  }
  if (!header) throw ParseError(name, lineno, "missing arch_hash header");
  return b;
}

inline Bitstream load_bitstream_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open bitstream '" + path + "'");
  return parse_bitstream(in, path);
}

} // namespace secfpga
