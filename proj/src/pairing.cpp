#include "quase/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

namespace quase {

namespace {

std::vector<std::string> token_set(const Sentence& s) {
  std::vector<std::string> v(s.tokens);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::size_t intersection_size(const std::vector<std::string>& a,
                              const std::vector<std::string>& b) {
  std::size_t i = 0, j = 0, n = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

PseudoPair make_pair(const std::vector<RatedSentence>& corpus, int i, int j, double ji) {
  // x is the lower-rated member.
  int lo = i, hi = j;
  if (corpus[static_cast<std::size_t>(j)].rating < corpus[static_cast<std::size_t>(i)].rating) {
    std::swap(lo, hi);
  }
  PseudoPair p;
  p.x = corpus[static_cast<std::size_t>(lo)];
  p.x_prime = corpus[static_cast<std::size_t>(hi)];
  p.jaccard = ji;
  p.rating_gap = std::abs(p.x_prime.rating - p.x.rating);
  p.idx_x = lo;
  p.idx_x_prime = hi;
  return p;
}

}  // namespace

double jaccard(const Sentence& a, const Sentence& b) {
  if (a.tokens.empty() || b.tokens.empty()) {
    throw CorpusError("jaccard: empty sentence");
  }
  const auto sa = token_set(a);
  const auto sb = token_set(b);
  const std::size_t inter = intersection_size(sa, sb);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<PseudoPair> mine_pairs(const std::vector<RatedSentence>& corpus,
                                   double ji_min, double gap_min) {
  if (corpus.size() < 2) throw CorpusError("mine_pairs: corpus size must be >= 2");

  std::vector<std::vector<std::string>> sets;
  sets.reserve(corpus.size());
  for (const RatedSentence& r : corpus) sets.push_back(token_set(r.sentence));

  // Candidates must share at least one token.
  std::unordered_map<std::string, std::vector<int>> inverted;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (const std::string& t : sets[i]) {
      inverted[t].push_back(static_cast<int>(i));
    }
  }

  std::vector<PseudoPair> out;
  std::vector<int> mark(corpus.size(), -1);  // dedupes (i, j) candidates per i
  for (int i = 0; i < static_cast<int>(corpus.size()); ++i) {
    const auto& si = sets[static_cast<std::size_t>(i)];
    for (const std::string& t : si) {
      for (int j : inverted[t]) {
        if (j <= i || mark[static_cast<std::size_t>(j)] == i) continue;
        mark[static_cast<std::size_t>(j)] = i;
        const double gap = std::abs(corpus[static_cast<std::size_t>(i)].rating -
                                    corpus[static_cast<std::size_t>(j)].rating);
        if (gap < gap_min) continue;
        const auto& sj = sets[static_cast<std::size_t>(j)];
        if (si == sj) continue;
        const std::size_t inter = intersection_size(si, sj);
        const std::size_t uni = si.size() + sj.size() - inter;
        const double ji = static_cast<double>(inter) / static_cast<double>(uni);
        if (ji < ji_min) continue;
        out.push_back(make_pair(corpus, i, j, ji));
      }
    }
  }
  // Canonical order so parallel/serial mining would be byte-identical.
  std::sort(out.begin(), out.end(), [](const PseudoPair& a, const PseudoPair& b) {
    const auto ka = std::minmax(a.idx_x, a.idx_x_prime);
    const auto kb = std::minmax(b.idx_x, b.idx_x_prime);
    return ka < kb;
  });
  return out;
}

WordDelta word_delta(const PseudoPair& pair) {
  const auto sx = token_set(pair.x.sentence);
  const auto sxp = token_set(pair.x_prime.sentence);
  WordDelta d;
  std::set_difference(sxp.begin(), sxp.end(), sx.begin(), sx.end(),
                      std::back_inserter(d.inc));
  std::set_difference(sx.begin(), sx.end(), sxp.begin(), sxp.end(),
                      std::back_inserter(d.dec));
  if (d.inc.empty() && d.dec.empty()) {
    throw CorpusError("word_delta: pair members have identical token sets");
  }
  return d;
}

std::pair<std::string, std::string> sample_delta(const WordDelta& delta, Rng& rng) {
  auto draw = [&rng](const std::vector<std::string>& side) {
    if (side.empty()) return kNullToken;
    return side[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(side.size())))];
  };
  return {draw(delta.inc), draw(delta.dec)};
}

std::vector<TrainingPoint> compose_datapoints(const std::vector<RatedSentence>& singles,
                                              const std::vector<PseudoPair>& pairs,
                                              Rng& rng) {
  if (singles.empty()) throw CorpusError("compose_datapoints: no single sentences");
  std::vector<TrainingPoint> points;
  points.reserve(pairs.size());
  for (const PseudoPair& p : pairs) {
    TrainingPoint tp;
    tp.single = singles[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(singles.size())))];
    tp.pair = p;
    const WordDelta d = word_delta(p);
    std::tie(tp.sampled_inc, tp.sampled_dec) = sample_delta(d, rng);
    points.push_back(std::move(tp));
  }
  return points;
}

void resample_deltas(std::vector<TrainingPoint>& points, Rng& rng) {
  for (TrainingPoint& tp : points) {
    if (!tp.pair) continue;
    const WordDelta d = word_delta(*tp.pair);
    std::tie(tp.sampled_inc, tp.sampled_dec) = sample_delta(d, rng);
  }
}

void save_pairs(const std::string& path, const std::vector<PseudoPair>& pairs,
                const std::vector<std::string>& header_lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("pairs: cannot open " + path + " for writing");
  for (const std::string& h : header_lines) out << "# " << h << "\n";
  for (const PseudoPair& p : pairs) {
    out << p.idx_x << '\t' << p.idx_x_prime << '\t' << format_double(p.jaccard) << '\t'
        << format_double(p.rating_gap) << "\n";
  }
  if (!out) throw CorpusError("pairs: write failure on " + path);
}

std::vector<PseudoPair> load_pairs(const std::string& path,
                                   const std::vector<RatedSentence>& dataset) {
  std::ifstream in(path);
  if (!in) throw CorpusError("pairs: cannot open " + path);
  std::vector<PseudoPair> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 4) {
      throw CorpusError("pairs: " + path + ":" + std::to_string(lineno) +
                        ": expected 4 tab-separated fields");
    }
    try {
      const int i = static_cast<int>(std::stol(fields[0]));
      const int j = static_cast<int>(std::stol(fields[1]));
      if (i < 0 || j < 0 || i >= static_cast<int>(dataset.size()) ||
          j >= static_cast<int>(dataset.size())) {
        throw CorpusError("index outside dataset");
      }
      PseudoPair p = make_pair(dataset, i, j, parse_double(fields[2]));
      p.rating_gap = parse_double(fields[3]);
      pairs.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw CorpusError("pairs: " + path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return pairs;
}

}  // namespace quase
