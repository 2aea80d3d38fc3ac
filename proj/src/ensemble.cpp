#include "ensemble.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace negscope {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, '\t')) out.push_back(field);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

template <typename Fn>
void read_rows(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    fn(lineno, split_tabs(line));
  }
}

double to_double(const std::string& s, const std::string& path, std::size_t lineno) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ParseError(path, lineno, "bad number '" + s + "'");
  }
  return v;
}

long to_long(const std::string& s, const std::string& path, std::size_t lineno) {
  char* end = nullptr;
  long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ParseError(path, lineno, "bad integer '" + s + "'");
  }
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  return out;
}

std::string fmt_prob(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", p);
  return buf;
}

}  // namespace

std::vector<ProbabilityRecord> read_probabilities(const std::string& path) {
  std::vector<ProbabilityRecord> out;
  read_rows(path, [&](std::size_t lineno, const std::vector<std::string>& cols) {
    if (cols.size() != 5) {
      throw ParseError(path, lineno, "probability rows have 5 columns, found " +
                                         std::to_string(cols.size()));
    }
    ProbabilityRecord r;
    r.sentence_id = cols[0];
    r.instance = static_cast<std::size_t>(to_long(cols[1], path, lineno));
    r.token = static_cast<int>(to_long(cols[2], path, lineno));
    r.p_out = to_double(cols[3], path, lineno);
    r.p_in = to_double(cols[4], path, lineno);
    out.push_back(std::move(r));
  });
  return out;
}

void write_probabilities(const std::vector<ProbabilityRecord>& records, const std::string& path) {
  auto out = open_out(path);
  out << "# sent_id\tinstance\ttoken\tp_out\tp_in\n";
  for (const auto& r : records) {
    out << r.sentence_id << '\t' << r.instance << '\t' << r.token << '\t' << fmt_prob(r.p_out)
        << '\t' << fmt_prob(r.p_in) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

std::vector<LabelRecord> read_labels(const std::string& path) {
  std::vector<LabelRecord> out;
  read_rows(path, [&](std::size_t lineno, const std::vector<std::string>& cols) {
    if (cols.size() != 6) {
      throw ParseError(path, lineno,
                       "label rows have 6 columns, found " + std::to_string(cols.size()));
    }
    LabelRecord r;
    r.sentence_id = cols[0];
    r.instance = static_cast<std::size_t>(to_long(cols[1], path, lineno));
    r.token = static_cast<int>(to_long(cols[2], path, lineno));
    long label = to_long(cols[3], path, lineno);
    if (label != 0 && label != 1) throw ParseError(path, lineno, "label must be 0 or 1");
    r.label = static_cast<int>(label);
    if (cols[4] != "A" && cols[4] != "B") throw ParseError(path, lineno, "winner must be A or B");
    r.winner = cols[4][0];
    r.margin = to_double(cols[5], path, lineno);
    out.push_back(std::move(r));
  });
  return out;
}

void write_labels(const std::vector<LabelRecord>& records, const std::string& path) {
  auto out = open_out(path);
  out << "# sent_id\tinstance\ttoken\tlabel\twinner\tmargin\n";
  for (const auto& r : records) {
    out << r.sentence_id << '\t' << r.instance << '\t' << r.token << '\t' << r.label << '\t'
        << r.winner << '\t' << fmt_prob(r.margin) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

std::vector<LabelRecord> read_predictions(const std::string& path) {
  // Sniff the first data row's width.
  std::size_t width = 0;
  {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      width = split_tabs(line).size();
      break;
    }
  }
  if (width == 6 || width == 0) return read_labels(path);
  std::vector<LabelRecord> out;
  for (const auto& p : read_probabilities(path)) {
    LabelRecord r;
    r.sentence_id = p.sentence_id;
    r.instance = p.instance;
    r.token = p.token;
    r.label = argmax_label({p.p_out, p.p_in});
    r.margin = std::abs(p.p_in - p.p_out);
    out.push_back(std::move(r));
  }
  return out;
}

VotePrediction confidence_vote(std::span<const ProbPair> a, std::span<const ProbPair> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "confidence_vote: token counts differ (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  }
  VotePrediction v;
  v.label.resize(a.size());
  v.winner.resize(a.size());
  v.margin.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    double ma = std::abs(a[i][1] - a[i][0]);
    double mb = std::abs(b[i][1] - b[i][0]);
    bool pick_b = mb > ma;
    const ProbPair& w = pick_b ? b[i] : a[i];
    v.winner[i] = pick_b ? 1 : 0;
    v.margin[i] = pick_b ? mb : ma;
    v.label[i] = argmax_label(w);
  }
  return v;
}

std::vector<LabelRecord> vote_records(const std::vector<ProbabilityRecord>& a,
                                      const std::vector<ProbabilityRecord>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kValidation, "ensemble: probability files have " +
                                            std::to_string(a.size()) + " and " +
                                            std::to_string(b.size()) + " rows");
  }
  std::vector<ProbPair> pa(a.size()), pb(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].sentence_id != b[i].sentence_id || a[i].instance != b[i].instance ||
        a[i].token != b[i].token) {
      throw Error(ErrorCode::kValidation,
                  "ensemble: row " + std::to_string(i + 1) + " is misaligned (" +
                      a[i].sentence_id + "/" + std::to_string(a[i].instance) + "/" +
                      std::to_string(a[i].token) + " vs " + b[i].sentence_id + "/" +
                      std::to_string(b[i].instance) + "/" + std::to_string(b[i].token) + ")");
    }
    pa[i] = {a[i].p_out, a[i].p_in};
    pb[i] = {b[i].p_out, b[i].p_in};
  }
  VotePrediction v = confidence_vote(pa, pb);
  std::vector<LabelRecord> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = {a[i].sentence_id, a[i].instance, a[i].token, v.label[i],
              v.winner[i] ? 'B' : 'A', v.margin[i]};
  }
  return out;
}

}  // namespace negscope
