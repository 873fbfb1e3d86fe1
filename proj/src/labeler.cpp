#include "nflow/labeler.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <regex>

#include <spdlog/spdlog.h>

#include "nflow/error.hpp"
#include "nflow/io.hpp"
#include "nflow/parallel.hpp"

namespace nflow {

PmiTable::PmiTable(std::vector<std::map<std::string, double>> group_counts, double alpha)
    : counts_(std::move(group_counts)), alpha_(alpha) {
  if (alpha_ < 0.0) throw Error("PMI alpha must be >= 0");
  group_totals_.assign(counts_.size(), 0.0);
  double raw_total = 0.0;
  for (std::size_t g = 0; g < counts_.size(); ++g) {
    for (const auto& [u, c] : counts_[g]) {
      unit_totals_[u] += c;
      group_totals_[g] += c;
      raw_total += c;
    }
  }
  const double v = static_cast<double>(unit_totals_.size());
  const double k = static_cast<double>(counts_.size());
  grand_total_ = raw_total + alpha_ * v * k;
  for (auto& [u, t] : unit_totals_) t += alpha_ * k;
  for (auto& t : group_totals_) t += alpha_ * v;
}

double PmiTable::score(const std::string& unit, std::size_t group) const {
  const auto& g = counts_.at(group);
  auto it = g.find(unit);
  const double joint = (it == g.end() ? 0.0 : it->second) + alpha_;
  auto ut = unit_totals_.find(unit);
  if (joint <= 0.0 || ut == unit_totals_.end()) return -std::numeric_limits<double>::infinity();
  return std::log2(joint * grand_total_ / (ut->second * group_totals_[group]));
}

std::vector<PmiEntry> PmiTable::ranked(std::size_t group, std::size_t top_k, double min_count) const {
  std::vector<PmiEntry> all;
  for (const auto& [u, c] : counts_.at(group)) {
    if (c <= 0.0 || c < min_count) continue;
    all.push_back({u, score(u, group), c});
  }
  std::sort(all.begin(), all.end(), [](const PmiEntry& a, const PmiEntry& b) {
    return a.pmi != b.pmi ? a.pmi > b.pmi : a.unit < b.unit;
  });
  if (all.size() > top_k) all.resize(top_k);
  return all;
}

std::vector<ClusterKeywords> pmi_keywords(const std::vector<StoryCluster>& clusters,
                                          const Corpus& corpus, const PmiOptions& options) {
  std::vector<const StoryCluster*> live;
  for (const auto& c : clusters) {
    if (!c.pruned) live.push_back(&c);
  }
  const auto& stop = text::stopwords();
  std::vector<std::map<std::string, double>> counts(live.size());
  parallel_for(live.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      for (auto pid : live[i]->member_passages) {
        auto pos = corpus.find_passage(pid);
        if (!pos || !corpus.passages[*pos].text) continue;
        for (const auto& tok : text::tokenize(*corpus.passages[*pos].text)) {
          if (tok.size() < 2 || stop.contains(tok)) continue;
          std::string norm = options.normalizer(tok);
          if (norm.size() < 2 || stop.contains(norm)) continue;
          counts[i][norm] += 1.0;
        }
      }
    }
  }, 1);
  PmiTable table(counts, options.alpha);
  std::vector<ClusterKeywords> out(live.size());
  for (std::size_t i = 0; i < live.size(); ++i) {
    out[i].cluster_id = live[i]->cluster_id;
    if (counts[i].empty()) {
      spdlog::warn("cluster {} has no text; keyword list left empty", live[i]->cluster_id);
      continue;
    }
    out[i].keywords = table.ranked(i, options.top_k);
  }
  return out;
}

std::vector<StanceAssociation> pmi_stance_associations(const std::vector<ArticleStance>& stances,
                                                       const SiteRegistry& sites,
                                                       std::size_t min_articles, std::size_t top_k,
                                                       double alpha) {
  // Tag key "<direction>\t<target>" keeps lexicographic ties deterministic.
  std::vector<std::map<std::string, double>> counts(kEcosystemCount);
  for (const auto& s : stances) {
    if (s.stance == Stance::Neutral) continue;
    const auto eco = index_of(sites.reliability(s.site));
    counts[eco][std::string(to_string(s.stance)) + "\t" + s.target] += 1.0;
  }
  PmiTable table(counts, alpha);
  std::vector<StanceAssociation> out;
  for (auto eco : kEcosystems) {
    const auto ranked = table.ranked(index_of(eco), top_k, static_cast<double>(min_articles));
    if (ranked.empty()) {
      spdlog::warn("no stance tag reaches {} articles in the {} ecosystem", min_articles, to_string(eco));
    }
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      const auto tab = ranked[r].unit.find('\t');
      StanceAssociation a;
      a.ecosystem = eco;
      a.rank = r + 1;
      a.direction = *parse_stance(ranked[r].unit.substr(0, tab));
      a.target = ranked[r].unit.substr(tab + 1);
      a.pmi = ranked[r].pmi;
      a.articles = static_cast<std::size_t>(ranked[r].count);
      out.push_back(std::move(a));
    }
  }
  return out;
}

bool is_blocked_pattern(std::string_view token) {
  static const std::regex number(R"(^[+-]?[0-9][0-9,]*(\.[0-9]+)?$)");
  static const std::regex money(R"(^([$€£¥][0-9][0-9,.]*[kmb]?|[0-9][0-9,.]*(usd|eur|gbp|dollars?|euros?|pounds?)|usd|eur)$)");
  static const std::regex percent(R"(^([0-9][0-9,.]*%|percent|pct)$)");
  static const std::regex ordinal(R"(^[0-9]+(st|nd|rd|th)$)");
  static const std::regex time(R"(^[0-9]{1,2}(:[0-9]{2})?(am|pm)?$|^[0-9]{4}s$)");
  static const std::unordered_set<std::string> calendar{
      "january", "february", "march", "april", "may", "june", "july", "august", "september",
      "october", "november", "december", "monday", "tuesday", "wednesday", "thursday", "friday",
      "saturday", "sunday", "today", "yesterday", "tomorrow"};
  const std::string t(token);
  return std::regex_match(t, number) || std::regex_match(t, money) ||
         std::regex_match(t, percent) || std::regex_match(t, ordinal) ||
         std::regex_match(t, time) || calendar.contains(t);
}

std::vector<std::string> select_stance_targets(const std::vector<ClusterKeywords>& keywords,
                                               const std::unordered_set<std::string>& stopwords,
                                               const std::unordered_set<std::string>& blocked_names,
                                               std::size_t top_n_entities, std::size_t scope_k) {
  std::map<std::string, std::size_t> frequency;
  for (const auto& ck : keywords) {
    for (std::size_t r = 0; r < std::min(scope_k, ck.keywords.size()); ++r) {
      const auto& w = ck.keywords[r].unit;
      if (stopwords.contains(w) || blocked_names.contains(w) || is_blocked_pattern(w)) continue;
      const bool has_alpha = std::any_of(w.begin(), w.end(), [](unsigned char c) { return std::isalpha(c); });
      if (!has_alpha) continue;
      ++frequency[w];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(frequency.begin(), frequency.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(top_n_entities, ranked.size()); ++i) out.push_back(ranked[i].first);
  return out;
}

std::map<std::string, std::set<std::uint64_t>> stance_scope(const std::vector<ClusterKeywords>& keywords,
                                                            const std::vector<std::string>& targets,
                                                            std::size_t scope_k) {
  std::map<std::string, std::set<std::uint64_t>> scope;
  for (const auto& t : targets) scope[t];
  for (const auto& ck : keywords) {
    for (std::size_t r = 0; r < std::min(scope_k, ck.keywords.size()); ++r) {
      auto it = scope.find(ck.keywords[r].unit);
      if (it != scope.end()) it->second.insert(ck.cluster_id);
    }
  }
  return scope;
}

std::string keywords_to_csv(const std::vector<ClusterKeywords>& keywords) {
  std::string out = "cluster_id,rank,keyword,pmi\n";
  for (const auto& ck : keywords) {
    for (std::size_t r = 0; r < ck.keywords.size(); ++r) {
      out += std::to_string(ck.cluster_id) + "," + std::to_string(r + 1) + "," +
             io::csv_field(ck.keywords[r].unit) + "," + io::fmt_real(ck.keywords[r].pmi) + "\n";
    }
  }
  return out;
}

std::vector<ClusterKeywords> keywords_from_csv(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  const std::string file = path.string();
  if (lines.empty() || lines[0].text != "cluster_id,rank,keyword,pmi") {
    throw InputError(file, 1, "header must be cluster_id,rank,keyword,pmi");
  }
  std::vector<ClusterKeywords> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].text.empty()) continue;
    auto f = io::split_csv(lines[i].text);
    if (f.size() != 4) throw InputError(file, lines[i].number, "expected 4 fields");
    std::uint64_t cid = 0;
    double pmi = 0.0;
    try {
      cid = std::stoull(f[0]);
      pmi = std::stod(f[3]);
    } catch (const std::exception&) {
      throw InputError(file, lines[i].number, "bad numeric field");
    }
    if (out.empty() || out.back().cluster_id != cid) out.push_back({cid, {}});
    out.back().keywords.push_back({f[2], pmi, 0.0});
  }
  return out;
}

std::string stance_associations_to_csv(const std::vector<StanceAssociation>& rows) {
  std::string out = "ecosystem,rank,direction,target,pmi\n";
  for (const auto& r : rows) {
    out += std::string(to_string(r.ecosystem)) + "," + std::to_string(r.rank) + "," +
           std::string(to_string(r.direction)) + "," + io::csv_field(r.target) + "," +
           io::fmt_real(r.pmi) + "\n";
  }
  return out;
}

}  // namespace nflow
