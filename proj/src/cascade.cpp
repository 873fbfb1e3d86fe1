#include "nflow/cascade.hpp"

#include <algorithm>
#include <tuple>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "nflow/error.hpp"
#include "nflow/io.hpp"

namespace nflow {

std::optional<Predominance> parse_predominance(std::string_view s) noexcept {
  if (s == "none" || s.empty()) return Predominance::None;
  if (s == "unreliable") return Predominance::UnreliablePlurality;
  if (s == "unreliable+mixed") return Predominance::UnreliableAndMixedPlurality;
  return std::nullopt;
}

std::map<std::uint64_t, EcosystemCounts> cluster_ecosystem_counts(const std::vector<StoryCluster>& clusters,
                                                                  const Corpus& corpus) {
  std::map<std::uint64_t, EcosystemCounts> out;
  for (const auto& c : clusters) {
    std::set<std::uint64_t> seen;
    EcosystemCounts counts{};
    for (auto pid : c.member_passages) {
      auto pos = corpus.find_passage(pid);
      if (!pos) continue;
      const auto& p = corpus.passages[*pos];
      if (seen.insert(p.article_id).second) ++counts[index_of(corpus.sites.reliability(p.site))];
    }
    out[c.cluster_id] = counts;
  }
  return out;
}

StanceIndex build_stance_index(const std::vector<StoryCluster>& clusters, const Corpus& corpus,
                               const std::vector<StanceInput>& labels) {
  std::map<std::uint64_t, std::uint64_t> cluster_of;
  for (const auto& c : clusters) {
    for (auto pid : c.member_passages) cluster_of[pid] = c.cluster_id;
  }
  std::vector<std::uint64_t> unknown;
  // (cluster, article, target) -> label counts
  std::map<std::tuple<std::uint64_t, std::uint64_t, std::string>, std::array<std::size_t, 3>> votes;
  for (const auto& l : labels) {
    auto pos = corpus.find_passage(l.passage_id);
    if (!pos) {
      unknown.push_back(l.passage_id);
      continue;
    }
    auto cl = cluster_of.find(l.passage_id);
    if (cl == cluster_of.end()) continue;
    ++votes[{cl->second, corpus.passages[*pos].article_id, l.target}][static_cast<std::size_t>(l.stance)];
  }
  if (!unknown.empty()) {
    std::string msg = "stance labels reference unknown passage_id(s):";
    for (std::size_t i = 0; i < std::min<std::size_t>(unknown.size(), 20); ++i) msg += " " + std::to_string(unknown[i]);
    if (unknown.size() > 20) msg += " ...";
    throw InputError(msg);
  }

  StanceIndex index;
  std::map<std::uint64_t, SiteIndex> article_site;
  for (const auto& c : clusters) {
    std::set<std::uint64_t> seen;
    for (auto pid : c.member_passages) {
      const auto& p = corpus.passages[*corpus.find_passage(pid)];
      article_site[p.article_id] = p.site;
      if (seen.insert(p.article_id).second) ++index[{c.cluster_id, p.site}].articles;
    }
  }
  for (const auto& [key, counts] : votes) {
    const auto& [cluster, article, target] = key;
    const Stance s = majority_stance(counts);
    ++index[{cluster, article_site.at(article)}].carrying[{s, target}];
  }
  return index;
}

std::vector<Cascade> build_cascades(const std::vector<StoryCluster>& clusters, const Corpus& corpus,
                                    std::size_t min_sites) {
  std::vector<Cascade> out;
  for (const auto& c : clusters) {
    if (c.pruned) continue;
    std::map<SiteIndex, double> first;
    for (auto pid : c.member_passages) {
      auto pos = corpus.find_passage(pid);
      if (!pos) continue;
      const auto& p = corpus.passages[*pos];
      auto [it, fresh] = first.try_emplace(p.site, p.published_day);
      if (!fresh) it->second = std::min(it->second, p.published_day);
    }
    if (first.size() < min_sites) continue;
    Cascade cas;
    cas.cluster_id = c.cluster_id;
    for (const auto& [site, t] : first) cas.events.push_back({site, t});
    std::sort(cas.events.begin(), cas.events.end(), [](const CascadeEvent& a, const CascadeEvent& b) {
      return a.t != b.t ? a.t < b.t : a.site < b.site;
    });
    cas.horizon = cas.events.back().t + 1.0;
    out.push_back(std::move(cas));
  }
  return out;
}

namespace {

bool strict_plurality(std::size_t winner, std::initializer_list<std::size_t> others) {
  return std::all_of(others.begin(), others.end(), [&](std::size_t o) { return winner > o; });
}

bool passes_predominance(Predominance p, const EcosystemCounts& c) {
  const auto rel = c[index_of(Reliability::Reliable)];
  const auto mix = c[index_of(Reliability::Mixed)];
  const auto unr = c[index_of(Reliability::Unreliable)];
  switch (p) {
    case Predominance::None:
      return true;
    case Predominance::UnreliablePlurality:
      return strict_plurality(unr, {rel, mix});
    case Predominance::UnreliableAndMixedPlurality:
      return strict_plurality(unr + mix, {rel});
  }
  return true;
}

}  // namespace

std::vector<Cascade> filter_cascades(const std::vector<Cascade>& cascades, const CascadeFilter& filter,
                                     const std::map<std::uint64_t, EcosystemCounts>& counts,
                                     const StanceIndex* stance_index) {
  if (filter.min_sites < 2) throw Error("min_sites must be >= 2");
  if (filter.stance && stance_index == nullptr) throw Error("stance filter requires a stance index");
  std::vector<Cascade> out;
  for (const auto& cas : cascades) {
    if (filter.predominance != Predominance::None) {
      auto it = counts.find(cas.cluster_id);
      if (it == counts.end() || !passes_predominance(filter.predominance, it->second)) continue;
    }
    Cascade kept = cas;
    if (filter.stance) {
      const std::pair<Stance, std::string> tag{filter.stance->direction, filter.stance->target};
      std::erase_if(kept.events, [&](const CascadeEvent& e) {
        auto it = stance_index->find({cas.cluster_id, e.site});
        if (it == stance_index->end() || it->second.articles == 0) return true;
        auto carry = it->second.carrying.find(tag);
        const std::size_t n = carry == it->second.carrying.end() ? 0 : carry->second;
        return 2 * n <= it->second.articles;
      });
    }
    if (kept.events.size() < filter.min_sites) continue;
    out.push_back(std::move(kept));
  }
  return out;
}

EcosystemRatio ecosystem_ratio(const StoryCluster& cluster, const Corpus& corpus, double t0, double t1) {
  if (!(t0 <= t1)) throw Error("ecosystem_ratio window must satisfy t0 <= t1");
  std::map<std::uint64_t, std::pair<double, SiteIndex>> articles;
  for (auto pid : cluster.member_passages) {
    auto pos = corpus.find_passage(pid);
    if (!pos) continue;
    const auto& p = corpus.passages[*pos];
    auto [it, fresh] = articles.try_emplace(p.article_id, p.published_day, p.site);
    if (!fresh) it->second.first = std::min(it->second.first, p.published_day);
  }
  EcosystemRatio r;
  for (const auto& [id, v] : articles) {
    if (v.first < t0 || v.first >= t1) continue;
    const auto eco = corpus.sites.reliability(v.second);
    if (eco == Reliability::Unreliable) ++r.unreliable;
    if (eco == Reliability::Reliable) ++r.reliable;
  }
  r.ratio = (static_cast<double>(r.unreliable) + 1.0) / (static_cast<double>(r.reliable) + 1.0);
  return r;
}

std::string cascades_to_jsonl(const std::vector<Cascade>& cascades, const SiteRegistry& sites) {
  std::string out;
  for (const auto& c : cascades) {
    nlohmann::ordered_json j;
    j["cluster_id"] = c.cluster_id;
    auto events = nlohmann::ordered_json::array();
    for (const auto& e : c.events) events.push_back({sites[e.site].domain, e.t});
    j["events"] = std::move(events);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Cascade> cascades_from_jsonl(const std::filesystem::path& path, const SiteRegistry& sites) {
  std::vector<Cascade> out;
  const std::string file = path.string();
  for (const auto& line : io::read_lines(path)) {
    if (line.text.empty()) continue;
    Cascade c;
    try {
      auto j = nlohmann::json::parse(line.text);
      c.cluster_id = j.at("cluster_id").get<std::uint64_t>();
      for (const auto& e : j.at("events")) {
        const auto domain = e.at(0).get<std::string>();
        auto site = sites.find(domain);
        if (!site) throw InputError(file, line.number, "unknown site '" + domain + "'");
        c.events.push_back({*site, e.at(1).get<double>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw InputError(file, line.number, std::string("bad cascade record: ") + e.what());
    }
    std::sort(c.events.begin(), c.events.end(), [](const CascadeEvent& a, const CascadeEvent& b) {
      return a.t != b.t ? a.t < b.t : a.site < b.site;
    });
    std::set<SiteIndex> uniq;
    for (const auto& e : c.events) {
      if (!uniq.insert(e.site).second) throw InputError(file, line.number, "site appears twice in one cascade");
    }
    c.horizon = c.events.empty() ? 0.0 : c.events.back().t + 1.0;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace nflow
