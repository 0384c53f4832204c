#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "numeric.hpp"
#include "profiles.hpp"
#include "text.hpp"

namespace mmcoal {

/// 1-based line and column; length in bytes (0 for end-of-line positions).
struct SourceSpan {
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t length = 0;
  bool operator==(const SourceSpan&) const = default;
};

enum class DiagnosticKind { Lexical, Structural, Value };

inline const char* to_string(DiagnosticKind k) {
  switch (k) {
    case DiagnosticKind::Lexical: return "lexical error";
    case DiagnosticKind::Structural: return "structural error";
    case DiagnosticKind::Value: return "value error";
  }
  return "error";
}

struct Diagnostic {
  DiagnosticKind kind;
  std::string message;
  std::vector<SourceSpan> spans;  // never empty

  std::string format(std::string_view source_name = "") const {
    std::ostringstream os;
    const SourceSpan& s = spans.front();
    if (!source_name.empty()) os << source_name << ':';
    os << s.line << ':' << s.column << ": " << to_string(kind) << ": " << message;
    for (std::size_t i = 1; i < spans.size(); ++i) {
      os << " (see " << spans[i].line << ':' << spans[i].column << ')';
    }
    return os.str();
  }
};

class ScenarioError : public Error {
 public:
  explicit ScenarioError(std::vector<Diagnostic> diagnostics)
      : Error(diagnostics.empty() ? "invalid scenario" : diagnostics.front().format()),
        diagnostics_(std::move(diagnostics)) {}
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

struct ScenarioDocument {
  SizeProfile profile = SizeProfile::constant();
  std::optional<double> gamma;
  std::optional<double> horizon;
  std::vector<std::string> labels;
  std::vector<SourceSpan> epoch_spans;  // not part of equality

  bool operator==(const ScenarioDocument& o) const {
    return profile == o.profile && gamma == o.gamma && horizon == o.horizon && labels == o.labels;
  }
};

namespace detail {

struct Token {
  std::string_view text;
  std::size_t column;
};

struct RawEpoch {
  double start = 0;
  double end = 0;
  bool exponential = false;
  double rate = 0;
  double size = 0;
  bool has_size = false;
  SourceSpan span;
};

class ScenarioParser {
 public:
  explicit ScenarioParser(std::string_view text) : text_(text) {}

  ScenarioDocument run() {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text_.size()) {
      std::size_t nl = text_.find('\n', pos);
      if (nl == std::string_view::npos) nl = text_.size();
      std::string_view line = text_.substr(pos, nl - pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      ++line_no;
      parse_line(line, line_no);
      if (nl == text_.size()) break;
      pos = nl + 1;
    }
    return finish();
  }

 private:
  void emit(DiagnosticKind k, std::string msg, std::vector<SourceSpan> spans) {
    diags_.push_back(Diagnostic{k, std::move(msg), std::move(spans)});
  }

  static std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      if (i >= line.size()) break;
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
      out.push_back(Token{line.substr(start, i - start), start + 1});
    }
    return out;
  }

  static SourceSpan span_of(std::size_t line, const Token& t) {
    return SourceSpan{line, t.column, t.text.size()};
  }

  // Parses a real-number token; emits a lexical diagnostic on failure.
  std::optional<double> real(std::size_t line, const Token& t, std::string_view value,
                             std::size_t offset, const char* what) {
    auto v = parse_real(value);
    if (!v) {
      emit(DiagnosticKind::Lexical, std::string("malformed ") + what,
           {SourceSpan{line, t.column + offset, value.size()}});
    }
    return v;
  }

  void parse_line(std::string_view line, std::size_t line_no) {
    auto toks = tokenize(line);
    if (toks.empty()) return;
    if (toks[0].text.front() == '#') return;
    const SourceSpan eol{line_no, line.size() + 1, 0};
    const std::string_view kw = toks[0].text;
    if (kw == "epoch") {
      parse_epoch(toks, line_no, eol, line.size());
    } else if (kw == "gamma" || kw == "horizon") {
      if (toks.size() < 2) {
        emit(DiagnosticKind::Structural, std::string("expected a value after ") + std::string(kw), {eol});
        return;
      }
      if (toks.size() > 2) {
        emit(DiagnosticKind::Structural, "unexpected token", {span_of(line_no, toks[2])});
        return;
      }
      auto v = real(line_no, toks[1], toks[1].text, 0, "number");
      if (!v) return;
      auto& slot = (kw == "gamma") ? gamma_ : horizon_;
      auto& slot_span = (kw == "gamma") ? gamma_span_ : horizon_span_;
      if (slot) {
        emit(DiagnosticKind::Structural, "duplicate " + std::string(kw) + " directive",
             {span_of(line_no, toks[0]), slot_span});
        return;
      }
      if (kw == "gamma" && !(*v >= 0.0)) {
        emit(DiagnosticKind::Value, "gamma must be nonnegative", {span_of(line_no, toks[1])});
        return;
      }
      if (kw == "horizon" && !(*v > 0.0)) {
        emit(DiagnosticKind::Value, "horizon must be positive", {span_of(line_no, toks[1])});
        return;
      }
      slot = *v;
      slot_span = span_of(line_no, toks[0]);
    } else if (kw == "label") {
      if (toks.size() < 2) {
        emit(DiagnosticKind::Structural, "expected text after label", {eol});
        return;
      }
      std::string_view rest = line.substr(toks[1].column - 1);
      while (!rest.empty() && (rest.back() == ' ' || rest.back() == '\t')) rest.remove_suffix(1);
      labels_.emplace_back(rest);
    } else {
      emit(DiagnosticKind::Lexical, "unknown keyword '" + printable(kw) + "'",
           {span_of(line_no, toks[0])});
    }
  }

  static std::string printable(std::string_view s) {
    std::string out;
    for (char c : s.substr(0, 40)) {
      const auto u = static_cast<unsigned char>(c);
      if (u >= 0x20 && u < 0x7f) {
        out += c;
      } else {
        static const char* hex = "0123456789abcdef";
        out += "\\x";
        out += hex[u >> 4];
        out += hex[u & 15];
      }
    }
    if (s.size() > 40) out += "...";
    return out;
  }

  void parse_epoch(const std::vector<Token>& toks, std::size_t line_no, const SourceSpan& eol,
                   std::size_t line_len) {
    RawEpoch e;
    e.span = SourceSpan{line_no, toks[0].column, line_len - (toks[0].column - 1)};
    if (toks.size() < 2) return emit(DiagnosticKind::Structural, "expected epoch start time", {eol});
    auto t0 = real(line_no, toks[1], toks[1].text, 0, "start time");
    if (!t0) return;
    if (!(*t0 >= 0.0)) {
      return emit(DiagnosticKind::Value, "epoch start must be nonnegative", {span_of(line_no, toks[1])});
    }
    e.start = *t0;
    if (toks.size() < 3) return emit(DiagnosticKind::Structural, "expected epoch end time", {eol});
    if (toks[2].text == "inf") {
      e.end = kInf;
    } else {
      auto t1 = real(line_no, toks[2], toks[2].text, 0, "end time");
      if (!t1) return;
      e.end = *t1;
    }
    if (!(e.end > e.start)) {
      return emit(DiagnosticKind::Structural, "epoch end must exceed its start",
                  {span_of(line_no, toks[2])});
    }
    if (toks.size() < 4) {
      return emit(DiagnosticKind::Structural, "expected 'constant' or 'exp'", {eol});
    }
    std::size_t next = 4;
    if (toks[3].text == "constant") {
      if (toks.size() < 5) return emit(DiagnosticKind::Structural, "expected size=<value>", {eol});
      if (!parse_size(toks[4], line_no, e)) return;
      next = 5;
    } else if (toks[3].text == "exp") {
      if (toks.size() < 5) return emit(DiagnosticKind::Structural, "expected rate=<value>", {eol});
      const Token& rt = toks[4];
      if (rt.text.substr(0, 5) != "rate=") {
        return emit(DiagnosticKind::Lexical, "expected rate=<value>", {span_of(line_no, rt)});
      }
      auto r = real(line_no, rt, rt.text.substr(5), 5, "rate");
      if (!r) return;
      e.exponential = true;
      e.rate = *r;
      next = 5;
      if (toks.size() > 5 && toks[5].text.substr(0, 5) == "size=") {
        if (!parse_size(toks[5], line_no, e)) return;
        next = 6;
      }
    } else {
      return emit(DiagnosticKind::Lexical,
                  "unknown epoch kind '" + printable(toks[3].text) + "'; expected constant or exp",
                  {span_of(line_no, toks[3])});
    }
    if (toks.size() > next) {
      return emit(DiagnosticKind::Structural, "unexpected token", {span_of(line_no, toks[next])});
    }
    raw_.push_back(e);
  }

  bool parse_size(const Token& t, std::size_t line_no, RawEpoch& e) {
    if (t.text.substr(0, 5) != "size=") {
      emit(DiagnosticKind::Lexical, "expected size=<value>", {span_of(line_no, t)});
      return false;
    }
    auto v = real(line_no, t, t.text.substr(5), 5, "size");
    if (!v) return false;
    if (!(*v > 0.0)) {
      emit(DiagnosticKind::Value, "size must be positive", {span_of(line_no, t)});
      return false;
    }
    e.size = *v;
    e.has_size = true;
    return true;
  }

  ScenarioDocument finish() {
    if (raw_.empty() && diags_.empty()) {
      emit(DiagnosticKind::Structural, "scenario defines no epochs", {SourceSpan{1, 1, 0}});
    }
    if (!raw_.empty()) {
      if (raw_.front().start != 0.0) {
        emit(DiagnosticKind::Structural, "first epoch must start at 0", {raw_.front().span});
      }
      for (std::size_t i = 1; i < raw_.size(); ++i) {
        const RawEpoch& a = raw_[i - 1];
        const RawEpoch& b = raw_[i];
        if (b.start < a.end) {
          emit(DiagnosticKind::Structural, "epoch overlaps the previous epoch", {b.span, a.span});
        } else if (b.start > a.end) {
          emit(DiagnosticKind::Structural, "gap between epochs", {b.span, a.span});
        }
      }
      if (raw_.back().end != kInf) {
        emit(DiagnosticKind::Structural, "last epoch must end at inf", {raw_.back().span});
      }
    }
    std::vector<Epoch> epochs;
    double exit = 1.0;
    for (const RawEpoch& r : raw_) {
      double size = r.has_size ? r.size : exit;
      if (!(size > 0.0) || !std::isfinite(size)) {
        emit(DiagnosticKind::Value, "continued size is not a positive finite number", {r.span});
        size = 1.0;
      }
      Epoch e = r.exponential ? Epoch{r.start, r.end, ExponentialEpoch{r.rate, size}}
                              : Epoch{r.start, r.end, ConstantEpoch{size}};
      exit = e.exit_size();
      epochs.push_back(e);
    }
    if (!diags_.empty()) throw ScenarioError(std::move(diags_));
    ScenarioDocument doc;
    try {
      doc.profile = SizeProfile(std::move(epochs));
    } catch (const DomainError& e) {
      throw ScenarioError({Diagnostic{DiagnosticKind::Structural, e.what(), {raw_.front().span}}});
    }
    doc.gamma = gamma_;
    doc.horizon = horizon_;
    doc.labels = std::move(labels_);
    for (const RawEpoch& r : raw_) doc.epoch_spans.push_back(r.span);
    return doc;
  }

  std::string_view text_;
  std::vector<Diagnostic> diags_;
  std::vector<RawEpoch> raw_;
  std::optional<double> gamma_, horizon_;
  SourceSpan gamma_span_, horizon_span_;
  std::vector<std::string> labels_;
};

}  // namespace detail

/// Parses scenario text; throws ScenarioError listing every diagnostic found.
inline ScenarioDocument parse_scenario(std::string_view text) {
  return detail::ScenarioParser(text).run();
}

/// Canonical text. An exp epoch omits size= when it equals the exit size of the
/// previous epoch (1 for the first epoch).
inline std::string render_scenario(const ScenarioDocument& doc) {
  std::string out;
  for (const auto& l : doc.labels) out += "label " + l + "\n";
  if (doc.gamma) out += "gamma " + format_g12(*doc.gamma) + "\n";
  if (doc.horizon) out += "horizon " + format_g12(*doc.horizon) + "\n";
  double exit = 1.0;
  for (const Epoch& e : doc.profile.epochs()) {
    out += "epoch " + format_g12(e.start) + " " + (std::isfinite(e.end) ? format_g12(e.end) : "inf");
    if (const auto* c = std::get_if<ConstantEpoch>(&e.shape)) {
      out += " constant size=" + format_g12(c->size);
    } else {
      const auto& x = std::get<ExponentialEpoch>(e.shape);
      out += " exp rate=" + format_g12(x.rate);
      if (x.start_size != exit) out += " size=" + format_g12(x.start_size);
    }
    out += "\n";
    exit = e.exit_size();
  }
  return out;
}

struct Discontinuity {
  double time;
  double before;
  double after;
};

struct ScenarioReport {
  double min_size = 0;
  double max_size = 0;
  std::vector<Discontinuity> discontinuities;
  bool normalized = true;
  std::vector<std::string> flags;
};

/// Range of nu over [0, horizon] (inf and sup, left limits included), jumps larger
/// than a relative 1e-6, and normalization.
inline ScenarioReport check_scenario(const ScenarioDocument& doc, double horizon) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw DomainError("horizon must be finite");
  ScenarioReport rep;
  rep.min_size = kInf;
  rep.max_size = 0.0;
  const auto& ep = doc.profile.epochs();
  for (std::size_t i = 0; i < ep.size(); ++i) {
    const Epoch& e = ep[i];
    if (e.start > horizon) break;
    const double a = e.size_at(e.start);
    const double b = e.size_at(std::min(e.end, horizon));
    rep.min_size = std::min({rep.min_size, a, b});
    rep.max_size = std::max({rep.max_size, a, b});
    if (i > 0) {
      const double before = ep[i - 1].exit_size();
      if (std::fabs(before - a) > 1e-6 * std::max(before, a)) {
        rep.discontinuities.push_back(Discontinuity{e.start, before, a});
      }
    }
  }
  rep.normalized = doc.profile.normalized();
  if (!rep.normalized) rep.flags.push_back("profile not normalized");
  return rep;
}

}  // namespace mmcoal
