#include "evver/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "evver/error.hpp"
#include "evver/parallel.hpp"
#include "evver/rng.hpp"
#include "evver/text_features.hpp"

namespace evver {
namespace {

std::string lower_trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(b, e - b + 1));
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Partial Fisher-Yates: the first k entries of `pool` become a uniform
// k-subset.
template <class T>
void sample_prefix(std::vector<T>& pool, std::size_t k, Rng& rng) {
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
}

int credible_source_rank(SourceDataset s) {
  switch (s) {
    case SourceDataset::fnc: return 0;
    case SourceDataset::nelagt: return 1;
    default: return 2;
  }
}

}  // namespace

std::set<std::string> TopicMap::groups() const {
  std::set<std::string> out;
  for (const auto& [raw, group] : raw_to_group) out.insert(group);
  return out;
}

TopicMap TopicMap::from_json(const nlohmann::json& j) {
  const nlohmann::json& obj = j.contains("raw_to_group") ? j.at("raw_to_group") : j;
  if (!obj.is_object()) throw DataError("topic map must be a JSON object");
  TopicMap map;
  for (const auto& [raw, group] : obj.items()) {
    map.raw_to_group[lower_trim(raw)] = lower_trim(group.get<std::string>());
  }
  return map;
}

TopicMap TopicMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open topic map " + path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string consolidate_topic(std::string_view raw_topic, const TopicMap& map,
                              std::size_t* unknown_counter) {
  auto it = map.raw_to_group.find(lower_trim(raw_topic));
  if (it != map.raw_to_group.end()) return it->second;
  if (unknown_counter) ++*unknown_counter;
  return std::string(kFallbackTopic);
}

std::vector<Article> dedup(std::vector<Article> articles) {
  std::unordered_set<std::string> seen;
  std::vector<Article> out;
  out.reserve(articles.size());
  for (auto& a : articles) {
    std::string key = normalize_title_key(a.title);
    if (key.empty()) continue;
    if (seen.insert(std::move(key)).second) out.push_back(std::move(a));
  }
  return out;
}

std::vector<Article> filter_years(std::vector<Article> articles, int lo, int hi) {
  std::erase_if(articles, [&](const Article& a) { return a.date.year < lo || a.date.year > hi; });
  return articles;
}

BalancePlan BalancePlan::derive(const std::vector<Article>& articles) {
  std::map<CellKey, std::size_t> supply;
  for (const auto& a : articles) ++supply[CellKey{a.date.year, a.topic, a.label}];
  BalancePlan plan;
  for (const auto& [key, count] : supply) {
    if (key.label != ClassLabel::fact_checked) continue;
    plan.target_counts[key] = count;
    for (ClassLabel other : {ClassLabel::credible, ClassLabel::unreliable}) {
      CellKey k{key.year, key.topic, other};
      auto it = supply.find(k);
      plan.target_counts[k] = std::min(count, it == supply.end() ? 0 : it->second);
    }
  }
  return plan;
}

BalanceResult balance(const std::vector<Article>& articles, const BalancePlan& plan,
                      std::uint64_t seed, std::size_t workers) {
  std::map<CellKey, std::vector<const Article*>> pools;
  for (const auto& a : articles) pools[CellKey{a.date.year, a.topic, a.label}].push_back(&a);

  struct CellJob {
    CellKey key;
    std::size_t reference = 0;  // fact-checked count in the (year, topic) cell
    std::size_t target = 0;
    std::vector<const Article*> chosen;
    std::optional<Shortfall> shortfall;
  };
  std::vector<CellJob> jobs;
  for (const auto& [key, target] : plan.target_counts) {
    CellKey ref{key.year, key.topic, plan.reference_label};
    auto r = plan.target_counts.find(ref);
    jobs.push_back(CellJob{key, r == plan.target_counts.end() ? 0 : r->second, target, {}, {}});
  }

  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    CellJob& job = jobs[i];
    auto it = pools.find(job.key);
    std::vector<const Article*> pool = it == pools.end() ? std::vector<const Article*>{} : it->second;
    std::sort(pool.begin(), pool.end(), [](const Article* a, const Article* b) { return a->id < b->id; });

    if (job.key.label == plan.reference_label) {
      job.chosen = std::move(pool);
      return;
    }
    Rng rng = Rng::fork(seed, "balance/" + std::to_string(job.key.year) + "/" + job.key.topic +
                                  "/" + std::string(label_name(job.key.label)));
    std::size_t want = std::min(job.target, pool.size());
    if (job.key.label == ClassLabel::credible) {
      // preference tiers: Fake News Corpus, then NELA-GT, then anything else
      for (int tier = 0; tier < 3 && job.chosen.size() < want; ++tier) {
        std::vector<const Article*> sub;
        for (const Article* a : pool) {
          if (credible_source_rank(a->source_dataset) == tier) sub.push_back(a);
        }
        std::size_t take = std::min(want - job.chosen.size(), sub.size());
        sample_prefix(sub, take, rng);
        job.chosen.insert(job.chosen.end(), sub.begin(), sub.begin() + static_cast<std::ptrdiff_t>(take));
      }
    } else {
      sample_prefix(pool, want, rng);
      job.chosen.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(want));
    }
    std::size_t available = it == pools.end() ? 0 : it->second.size();
    if (available < job.reference) {
      job.shortfall = Shortfall{job.key.year, job.key.topic, job.key.label, job.reference, available};
    }
  });

  BalanceResult result;
  for (auto& job : jobs) {
    for (const Article* a : job.chosen) result.corpus.push_back(*a);
    if (job.shortfall) result.shortfalls.push_back(*job.shortfall);
  }
  std::sort(result.corpus.begin(), result.corpus.end(), [](const Article& a, const Article& b) {
    return std::tie(a.date.year, a.topic, a.label, a.id) < std::tie(b.date.year, b.topic, b.label, b.id);
  });
  return result;
}

SplitSet split(const std::vector<Article>& corpus, std::uint64_t seed) {
  SplitSet out;
  for (ClassLabel label : kAllLabels) {
    std::vector<std::string> ids;
    for (const auto& a : corpus) {
      if (a.label == label) ids.push_back(a.id);
    }
    std::sort(ids.begin(), ids.end());
    Rng rng = Rng::fork(seed, "split/" + std::string(label_name(label)));
    rng.shuffle(std::span<std::string>(ids));
    std::size_t n = ids.size();
    std::size_t n_train = n * 8 / 10;
    std::size_t n_val = n / 10;
    auto begin = ids.begin();
    out.train.article_ids.insert(out.train.article_ids.end(), begin, begin + static_cast<std::ptrdiff_t>(n_train));
    out.validation.article_ids.insert(out.validation.article_ids.end(), begin + static_cast<std::ptrdiff_t>(n_train),
                                      begin + static_cast<std::ptrdiff_t>(n_train + n_val));
    out.test.article_ids.insert(out.test.article_ids.end(), begin + static_cast<std::ptrdiff_t>(n_train + n_val),
                                ids.end());
  }
  return out;
}

CorpusReport corpus_stats(const std::vector<Article>& corpus) {
  CorpusReport r;
  r.total = corpus.size();
  for (ClassLabel l : kAllLabels) r.per_class[l] = ClassStats{};
  std::map<ClassLabel, std::vector<std::size_t>> lengths;
  std::size_t with_body = 0;
  for (const auto& a : corpus) {
    auto& cs = r.per_class[a.label];
    ++cs.total;
    bool has_body = a.body && !a.body->empty();
    if (has_body) {
      ++cs.with_body;
      ++with_body;
    }
    ++r.per_year[a.date.year][a.label];
    ++r.per_topic[a.topic][a.label];
    auto& src = r.per_source[a.source_dataset];
    ++src.first;
    if (has_body) ++src.second;
    lengths[a.label].push_back(tokenize(a.title).size());
  }
  r.full_text_percent = r.total ? 100.0 * static_cast<double>(with_body) / static_cast<double>(r.total) : 0.0;

  std::size_t max_len = 0;
  for (auto& [label, v] : lengths) {
    auto& cs = r.per_class[label];
    double sum = 0;
    for (auto n : v) sum += static_cast<double>(n);
    cs.title_tokens_mean = v.empty() ? 0.0 : sum / static_cast<double>(v.size());
    double ss = 0;
    for (auto n : v) ss += (static_cast<double>(n) - cs.title_tokens_mean) * (static_cast<double>(n) - cs.title_tokens_mean);
    cs.title_tokens_stddev = v.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(v.size()));
    for (auto n : v) max_len = std::max(max_len, n);
  }

  // max pairwise gap between empirical CDFs over title token length
  std::vector<std::vector<double>> cdfs;
  for (auto& [label, v] : lengths) {
    if (v.empty()) continue;
    std::vector<double> hist(max_len + 1, 0.0);
    for (auto n : v) hist[n] += 1.0;
    double acc = 0;
    for (auto& h : hist) {
      acc += h;
      h = acc / static_cast<double>(v.size());
    }
    cdfs.push_back(std::move(hist));
  }
  for (std::size_t a = 0; a < cdfs.size(); ++a) {
    for (std::size_t b = a + 1; b < cdfs.size(); ++b) {
      for (std::size_t k = 0; k <= max_len; ++k) {
        r.title_length_max_gap = std::max(r.title_length_max_gap, std::abs(cdfs[a][k] - cdfs[b][k]));
      }
    }
  }
  r.title_length_balanced = r.title_length_max_gap <= kTitleLengthGapLimit;
  return r;
}

void to_json(nlohmann::json& j, const CorpusReport& r) {
  j = nlohmann::json::object();
  j["total"] = r.total;
  j["full_text_percent"] = r.full_text_percent;
  j["title_length_max_gap"] = r.title_length_max_gap;
  j["title_length_balanced"] = r.title_length_balanced;
  auto& classes = j["per_class"] = nlohmann::json::object();
  for (const auto& [label, cs] : r.per_class) {
    classes[std::string(label_name(label))] = {{"total", cs.total},
                                               {"with_body", cs.with_body},
                                               {"title_tokens_mean", cs.title_tokens_mean},
                                               {"title_tokens_stddev", cs.title_tokens_stddev}};
  }
  auto& years = j["per_year"] = nlohmann::json::object();
  for (const auto& [year, counts] : r.per_year) {
    auto& y = years[std::to_string(year)] = nlohmann::json::object();
    for (const auto& [label, n] : counts) y[std::string(label_name(label))] = n;
  }
  auto& topics = j["per_topic"] = nlohmann::json::object();
  for (const auto& [topic, counts] : r.per_topic) {
    auto& t = topics[topic] = nlohmann::json::object();
    for (const auto& [label, n] : counts) t[std::string(label_name(label))] = n;
  }
  auto& sources = j["per_source"] = nlohmann::json::object();
  for (const auto& [src, counts] : r.per_source) {
    sources[std::string(source_name(src))] = {{"entries", counts.first}, {"with_body", counts.second}};
  }
}

std::string format_report(const CorpusReport& r) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %10s %10s %12s %12s\n", "Class", "Articles", "Full-text",
                "Title mean", "Title std");
  out << line;
  for (const auto& [label, cs] : r.per_class) {
    double pct = cs.total ? 100.0 * static_cast<double>(cs.with_body) / static_cast<double>(cs.total) : 0.0;
    std::snprintf(line, sizeof line, "%-14s %10s %9.1f%% %12.2f %12.2f\n",
                  std::string(label_name(label)).c_str(), with_thousands(cs.total).c_str(), pct,
                  cs.title_tokens_mean, cs.title_tokens_stddev);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-14s %10s %9.1f%%\n", "Total", with_thousands(r.total).c_str(),
                r.full_text_percent);
  out << line << '\n';

  std::snprintf(line, sizeof line, "%-18s %-14s %10s %10s\n", "Dataset", "", "Entries", "Full-text");
  out << line;
  for (const auto& [src, counts] : r.per_source) {
    double pct = counts.first ? 100.0 * static_cast<double>(counts.second) / static_cast<double>(counts.first) : 0.0;
    std::snprintf(line, sizeof line, "%-18s %-14s %10s %9.1f%%\n", std::string(source_name(src)).c_str(), "",
                  with_thousands(counts.first).c_str(), pct);
    out << line;
  }
  out << '\n';

  std::snprintf(line, sizeof line, "%-6s %12s %12s %12s\n", "Year", "fact_checked", "credible", "unreliable");
  out << line;
  for (const auto& [year, counts] : r.per_year) {
    auto get = [&](ClassLabel l) {
      auto it = counts.find(l);
      return it == counts.end() ? std::size_t{0} : it->second;
    };
    std::snprintf(line, sizeof line, "%-6d %12zu %12zu %12zu\n", year, get(ClassLabel::fact_checked),
                  get(ClassLabel::credible), get(ClassLabel::unreliable));
    out << line;
  }
  std::snprintf(line, sizeof line, "\nTitle-length CDF max gap: %.4f (%s)\n", r.title_length_max_gap,
                r.title_length_balanced ? "balanced" : "UNBALANCED");
  out << line;
  return out.str();
}

void to_json(nlohmann::json& j, const Shortfall& s) {
  j = nlohmann::json{{"year", s.year},           {"topic", s.topic},         {"label", s.label},
                     {"requested", s.requested}, {"available", s.available}, {"missing", s.missing()}};
}

}  // namespace evver
