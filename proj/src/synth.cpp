#include "usagelog/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <unordered_set>

#include "usagelog/dedup.hpp"
#include "usagelog/error.hpp"

namespace usagelog {

void SynthConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (n_requesters < 1) bad("n_requesters must be positive");
  if (n_requesters > (std::size_t{1} << 24)) bad("n_requesters exceeds 16777216");
  if (n_referents < 1) bad("n_referents must be positive");
  if (n_journals < 1 || n_journals > n_referents) bad("n_journals must be in [1, n_referents]");
  if (!(referent_zipf_s > 0) || !(requester_zipf_s > 0)) bad("Zipf exponents must be positive");
  if (!(duplicate_variant_rate >= 0 && duplicate_variant_rate <= 1))
    bad("duplicate_variant_rate must be in [0, 1]");
  if (n_heavy_hitters >= n_requesters) bad("n_heavy_hitters must be below n_requesters");
  if (!(heavy_hitter_multiplier >= 1)) bad("heavy_hitter_multiplier must be at least 1");
  if (!(session_gap_minutes * 60 >= 2)) bad("session_gap_minutes must be at least 2 seconds");
}

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double u01() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return n ? static_cast<std::size_t>(g_() % n) : 0; }
  bool chance(double p) { return u01() < p; }
  double normal() {
    const double u = 1.0 - u01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2 * std::numbers::pi * u01());
  }

 private:
  std::mt19937_64 g_;
};

class Cumulative {
 public:
  void add(double w) { c_.push_back((c_.empty() ? 0.0 : c_.back()) + w); }
  bool empty() const { return c_.empty(); }
  std::size_t sample(Rng& rng) const {
    const double x = rng.u01() * c_.back();
    const auto i = static_cast<std::size_t>(std::upper_bound(c_.begin(), c_.end(), x) - c_.begin());
    return std::min(i, c_.size() - 1);
  }

 private:
  std::vector<double> c_;
};

constexpr std::string_view kWords[] = {
    "analysis", "adaptive", "alternative", "behavior", "biological", "cellular", "clinical",
    "cognitive", "comparative", "complex", "computational", "control", "cultural", "data",
    "design", "development", "diffusion", "digital", "dynamics", "ecology", "economic",
    "effects", "emerging", "energy", "evaluation", "evidence", "evolution", "experimental",
    "factors", "field", "framework", "functional", "genetic", "global", "growth", "health",
    "human", "impact", "information", "integrated", "interaction", "journal", "knowledge",
    "language", "learning", "local", "management", "mapping", "markets", "measurement",
    "mechanisms", "metrics", "model", "molecular", "network", "neural", "nursing", "optimal",
    "patterns", "performance", "policy", "population", "practice", "prediction", "processes",
    "protein", "public", "quality", "quantum", "reasoning", "regional", "research", "response",
    "retrieval", "risk", "role", "sampling", "scale", "security", "signal", "social", "spatial",
    "statistical", "stochastic", "structure", "study", "surface", "survey", "systems",
    "technology", "temporal", "theory", "therapy", "toward", "transfer", "urban", "usage",
    "validation", "variation", "visual", "water", "welfare",
};
constexpr std::size_t kWordCount = std::size(kWords);

std::string capitalized(std::string_view w) {
  std::string s(w);
  if (!s.empty()) s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string random_title(Rng& rng) {
  const std::size_t n = 4 + rng.below(6);
  std::string t;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) t += ' ';
    t += capitalized(kWords[rng.below(kWordCount)]);
  }
  return t;
}

std::string make_issn(std::size_t j) {
  const std::uint64_t digits = (static_cast<std::uint64_t>(j) * 7919 + 1234567) % 10'000'000;
  char buf[8];
  std::snprintf(buf, sizeof buf, "%07llu", static_cast<unsigned long long>(digits));
  std::string d = std::string("0") + buf;  // 8 chars, last replaced by check
  int sum = 0;
  for (int i = 0; i < 7; ++i) sum += (d[i] - '0') * (8 - i);
  const int check = (11 - sum % 11) % 11;
  d[7] = check == 10 ? 'X' : static_cast<char>('0' + check);
  return d.substr(0, 4) + "-" + d.substr(4);
}

std::string journal_title(std::size_t j, Rng& rng, std::unordered_set<std::string>& used) {
  static constexpr std::string_view kForms[] = {"Journal of {}", "Annals of {}", "{} Review",
                                                "International Journal of {}", "{} Letters",
                                                "Advances in {}"};
  for (int attempt = 0; attempt < 20; ++attempt) {
    std::string subject = capitalized(kWords[rng.below(kWordCount)]);
    if (rng.chance(0.6)) subject += " and " + capitalized(kWords[rng.below(kWordCount)]);
    std::string form(kForms[rng.below(std::size(kForms))]);
    const auto at = form.find("{}");
    form.replace(at, 2, subject);
    if (used.insert(form).second) return form;
  }
  std::string fallback = "Proceedings of Series " + std::to_string(j + 1);
  used.insert(fallback);
  return fallback;
}

struct Work {
  std::uint32_t journal;
  std::string title;
  std::string genre;
  int year;
  int spage;
  int epage;
  int volume;
  int issue;
  bool has_doi;
};

EntityDescriptor work_descriptor(const Work& w, std::uint32_t index, const SyntheticJournal& j) {
  EntityDescriptor d;
  if (w.has_doi) d.identifiers.push_back("info:doi/10.5555/syn." + std::to_string(index));
  ReferentMetadata m;
  m.genre = w.genre;
  m.atitle = w.title;
  m.jtitle = j.title;
  m.issn = j.issn;
  m.volume = std::to_string(w.volume);
  m.issue = std::to_string(w.issue);
  m.spage = std::to_string(w.spage);
  m.epage = std::to_string(w.epage);
  m.date = std::to_string(w.year);
  d.metadata = std::move(m);
  return d;
}

std::string genre_for(Rng& rng) {
  const double u = rng.u01();
  if (u < 0.70) return "article";
  if (u < 0.82) return "proceeding";
  if (u < 0.92) return "bookitem";
  if (u < 0.97) return "preprint";
  return "unknown";
}

enum class Variant { None, Typo, Padding, DroppedIssn };

/// Applies one variant transformation in place.
Variant make_variant(EntityDescriptor& d, const Work& w, std::size_t pad_count, Rng& rng) {
  auto& m = *d.metadata;
  const int kind = static_cast<int>(rng.below(w.has_doi ? 3 : 2));
  if (kind == 0) {
    std::string& t = *m.atitle;
    std::vector<std::size_t> letters;
    for (std::size_t i = 0; i < std::min<std::size_t>(25, t.size()); ++i)
      if (std::isalpha(static_cast<unsigned char>(t[i]))) letters.push_back(i);
    if (letters.empty()) return Variant::None;
    const std::size_t pos = letters[rng.below(letters.size())];
    const bool upper = std::isupper(static_cast<unsigned char>(t[pos]));
    const char orig = static_cast<char>(std::tolower(static_cast<unsigned char>(t[pos])));
    char repl = static_cast<char>('a' + rng.below(25));
    if (repl >= orig) ++repl;
    t[pos] = upper ? static_cast<char>(std::toupper(repl)) : repl;
    return Variant::Typo;
  }
  if (kind == 1) {
    m.spage = std::string(pad_count + 1, '0') + *m.spage;
    return Variant::Padding;
  }
  m.issn.reset();
  return Variant::DroppedIssn;
}

struct CatalogBuild {
  SyntheticCatalog catalog;
  std::vector<Work> works;
};

CatalogBuild build_catalog(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  CatalogBuild b;
  auto& c = b.catalog;
  std::unordered_set<std::string> used_titles;
  for (std::size_t j = 0; j < config.n_journals; ++j)
    c.journals.push_back({make_issn(j), journal_title(j, rng, used_titles)});

  std::unordered_set<std::string> seen;
  std::vector<std::size_t> pad_counts;
  auto new_work = [&] {
    Work w;
    // The first n_journals works cover every journal once.
    w.journal = static_cast<std::uint32_t>(b.works.size() < config.n_journals
                                               ? b.works.size()
                                               : rng.below(config.n_journals));
    w.title = random_title(rng);
    w.genre = genre_for(rng);
    w.year = 1995 + static_cast<int>(rng.below(11));
    w.spage = 1 + static_cast<int>(rng.below(2000));
    w.epage = w.spage + static_cast<int>(rng.below(30));
    w.volume = 1 + static_cast<int>(rng.below(60));
    w.issue = 1 + static_cast<int>(rng.below(12));
    w.has_doi = rng.chance(0.7);
    const auto index = static_cast<std::uint32_t>(b.works.size());
    auto d = work_descriptor(w, index, c.journals[w.journal]);
    b.works.push_back(std::move(w));
    pad_counts.push_back(0);
    c.work_journal.push_back(b.works.back().journal);
    c.work_instances.emplace_back();
    seen.insert(referent_instance_key(d));
    c.work_instances[index].push_back(static_cast<std::uint32_t>(c.instances.size()));
    c.instance_work.push_back(index);
    c.instances.push_back(std::move(d));
  };

  while (c.instances.size() < config.n_referents) {
    if (b.works.size() < config.n_journals || !rng.chance(config.duplicate_variant_rate)) {
      new_work();
      continue;
    }
    bool placed = false;
    for (int attempt = 0; attempt < 8 && !placed; ++attempt) {
      const auto wi = static_cast<std::uint32_t>(rng.below(b.works.size()));
      const Work& w = b.works[wi];
      EntityDescriptor d = c.instances[c.work_instances[wi].front()];
      const Variant v = make_variant(d, w, pad_counts[wi], rng);
      if (v == Variant::None || !seen.insert(referent_instance_key(d)).second) continue;
      if (v == Variant::Padding) ++pad_counts[wi];
      c.work_instances[wi].push_back(static_cast<std::uint32_t>(c.instances.size()));
      c.instance_work.push_back(wi);
      c.instances.push_back(std::move(d));
      placed = true;
    }
    if (!placed) new_work();
  }
  return b;
}

std::vector<double> work_popularity(const SynthConfig& config, std::size_t n_works) {
  Rng rng(config.seed ^ 0x5bd1e995u);
  std::vector<std::size_t> rank(n_works);
  std::iota(rank.begin(), rank.end(), 0);
  for (std::size_t i = n_works; i > 1; --i) std::swap(rank[i - 1], rank[rng.below(i)]);
  std::vector<double> w(n_works);
  for (std::size_t i = 0; i < n_works; ++i)
    w[i] = std::pow(static_cast<double>(rank[i] + 1), -config.referent_zipf_s);
  return w;
}

constexpr std::string_view kReferrers[] = {"info:sid/elsevier.com:scopus", "info:sid/isi:wos",
                                           "info:sid/google:scholar", "info:sid/ebsco:aph",
                                           "info:sid/ovid:medline"};
constexpr std::string_view kResolver = "http://sfx.example.org/menu";

ServiceKind service_for(Rng& rng) {
  const double u = rng.u01();
  if (u < 0.60) return ServiceKind::FullText;
  if (u < 0.85) return ServiceKind::Abstract;
  if (u < 0.95) return ServiceKind::Citation;
  return ServiceKind::Holding;
}

struct CompactEvent {
  std::int64_t ts;
  std::uint32_t session;
  std::uint32_t position;
  std::uint32_t instance;
  std::uint8_t service;
  std::uint8_t referrer;
};

struct Session {
  std::uint32_t requester;
  std::int64_t start;
};

}  // namespace

std::string synthetic_requester_address(std::size_t i) {
  return "10." + std::to_string((i >> 16) & 255) + "." + std::to_string((i >> 8) & 255) + "." +
         std::to_string(i & 255);
}

SyntheticCatalog generate_catalog(const SynthConfig& config) {
  return build_catalog(config).catalog;
}

GroundTruth generate_synthetic(const SynthConfig& config,
                               const std::function<void(const UsageEvent&)>& sink) {
  const CatalogBuild build = build_catalog(config);
  const auto& cat = build.catalog;
  const std::size_t n_works = build.works.size();
  Rng rng(config.seed ^ 0x9E3779B97F4A7C15ull);

  // Requester activity: a shuffled Zipf over ordinary requesters plus planted
  // heavy hitters weighted relative to the top or median ordinary one.
  std::vector<std::uint32_t> perm(config.n_requesters);
  std::iota(perm.begin(), perm.end(), 0u);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  Cumulative requester_dist;
  std::vector<std::uint32_t> requester_of_slot(config.n_requesters);
  GroundTruth truth;
  const double ordinary = static_cast<double>(config.n_requesters - config.n_heavy_hitters);
  const double basis = config.heavy_hitter_basis == HeavyHitterBasis::Top
                           ? 1.0
                           : std::pow((ordinary + 1.0) / 2.0, -config.requester_zipf_s);
  for (std::size_t slot = 0; slot < config.n_requesters; ++slot) {
    const std::uint32_t id = perm[slot];
    requester_of_slot[slot] = id;
    if (slot < config.n_heavy_hitters) {
      requester_dist.add(config.heavy_hitter_multiplier * basis);
      truth.true_heavy_hitters.insert("urn:ip:" + synthetic_requester_address(id));
    } else {
      const double rank = static_cast<double>(slot - config.n_heavy_hitters + 1);
      requester_dist.add(std::pow(rank, -config.requester_zipf_s));
    }
  }

  const auto popularity = work_popularity(config, n_works);
  Cumulative global;
  std::vector<Cumulative> by_journal(config.n_journals);
  const std::size_t n_topics = std::max<std::size_t>(1, config.n_journals / 20);
  std::vector<Cumulative> by_topic(n_topics);
  std::vector<std::vector<std::uint32_t>> journal_works(config.n_journals), topic_works(n_topics);
  for (std::uint32_t w = 0; w < n_works; ++w) {
    const auto j = cat.work_journal[w];
    global.add(popularity[w]);
    by_journal[j].add(popularity[w]);
    journal_works[j].push_back(w);
    by_topic[j % n_topics].add(popularity[w]);
    topic_works[j % n_topics].push_back(w);
  }

  const double gap_s = config.session_gap_minutes * 60;
  const auto between = static_cast<std::int64_t>(std::ceil(gap_s));
  const auto within_max = std::min<std::int64_t>(120, between - 1);
  const std::int64_t base = std::chrono::sys_days{std::chrono::year{2005} / 1 / 1}
                                .time_since_epoch() / std::chrono::seconds(1);
  std::vector<std::int64_t> clock(config.n_requesters, -1);

  std::vector<Session> sessions;
  std::vector<CompactEvent> events;
  events.reserve(config.n_events);
  while (events.size() < config.n_events) {
    const auto requester = requester_of_slot[requester_dist.sample(rng)];
    std::size_t len = 1;
    while (rng.chance(0.75)) ++len;
    len = std::min(len, config.n_events - events.size());
    auto& t = clock[requester];
    if (t < 0) t = base + static_cast<std::int64_t>(rng.below(30 * 86400));
    const auto sid = static_cast<std::uint32_t>(sessions.size());
    sessions.push_back({requester, t});
    std::uint32_t work = static_cast<std::uint32_t>(global.sample(rng));
    for (std::size_t k = 0; k < len; ++k) {
      if (k > 0) {
        t += 1 + static_cast<std::int64_t>(rng.below(static_cast<std::size_t>(within_max)));
        const double u = rng.u01();
        const auto j = cat.work_journal[work];
        if (u < 0.6) work = journal_works[j][by_journal[j].sample(rng)];
        else if (u < 0.85) work = topic_works[j % n_topics][by_topic[j % n_topics].sample(rng)];
        else work = static_cast<std::uint32_t>(global.sample(rng));
      }
      const auto& inst = cat.work_instances[work];
      events.push_back({t, sid, static_cast<std::uint32_t>(k), inst[rng.below(inst.size())],
                        static_cast<std::uint8_t>(service_for(rng)),
                        static_cast<std::uint8_t>(rng.below(std::size(kReferrers)))});
    }
    t += between + static_cast<std::int64_t>(rng.below(static_cast<std::size_t>(between)));
  }

  std::vector<std::string> addresses(config.n_requesters);
  for (std::size_t i = 0; i < config.n_requesters; ++i)
    addresses[i] = "urn:ip:" + synthetic_requester_address(i);

  std::vector<std::uint32_t> session_order(sessions.size());
  std::iota(session_order.begin(), session_order.end(), 0u);
  std::sort(session_order.begin(), session_order.end(), [&](auto a, auto b) {
    const auto& ra = addresses[sessions[a].requester];
    const auto& rb = addresses[sessions[b].requester];
    if (ra != rb) return ra < rb;
    return sessions[a].start < sessions[b].start;
  });
  std::vector<std::uint32_t> dense_session(sessions.size());
  for (std::uint32_t i = 0; i < session_order.size(); ++i) dense_session[session_order[i]] = i;

  std::sort(events.begin(), events.end(), [&](const CompactEvent& a, const CompactEvent& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    if (a.session != b.session) return dense_session[a.session] < dense_session[b.session];
    return a.position < b.position;
  });

  std::vector<std::string> instance_keys(cat.instances.size());
  const IdSource ids = seeded_id_source(config.seed);
  truth.true_sessions.reserve(events.size());
  UsageEvent e;
  e.resolver.identifiers = {std::string(kResolver)};
  for (const auto& ce : events) {
    e.event_id = ids();
    e.event_timestamp = UtcTime{std::chrono::seconds{ce.ts}};
    e.referent = cat.instances[ce.instance];
    e.requester.identifiers = {addresses[sessions[ce.session].requester]};
    e.service_type = ServiceTypeFlags::of(static_cast<ServiceKind>(ce.service));
    e.referrer.identifiers = {std::string(kReferrers[ce.referrer])};
    auto& key = instance_keys[ce.instance];
    if (key.empty()) {
      key = referent_instance_key(e.referent);
      truth.true_clusters.emplace(key, cat.instance_work[ce.instance]);
    }
    truth.true_sessions.emplace(e.event_id, dense_session[ce.session]);
    sink(e);
  }
  return truth;
}

std::vector<UsageEvent> generate_events(const SynthConfig& config, GroundTruth* truth) {
  std::vector<UsageEvent> out;
  out.reserve(config.n_events);
  auto t = generate_synthetic(config, [&out](const UsageEvent& e) { out.push_back(e); });
  if (truth) *truth = std::move(t);
  return out;
}

void write_ground_truth(const GroundTruth& truth, const std::string& prefix) {
  auto open = [](const std::string& path) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw Error(ErrorCode::StorageFailure, "cannot write " + path);
    return out;
  };
  {
    auto out = open(prefix + ".clusters.tsv");
    for (const auto& [k, c] : truth.true_clusters) out << k << '\t' << c << '\n';
  }
  {
    auto out = open(prefix + ".heavy_hitters.tsv");
    for (const auto& r : truth.true_heavy_hitters) out << r << '\n';
  }
  {
    std::vector<std::pair<Uuid, std::uint32_t>> rows(truth.true_sessions.begin(),
                                                     truth.true_sessions.end());
    std::sort(rows.begin(), rows.end());
    auto out = open(prefix + ".sessions.tsv");
    for (const auto& [id, s] : rows) out << id.urn() << '\t' << s << '\n';
  }
}

std::map<std::string, double> synthetic_impact_factors(const SynthConfig& config) {
  const CatalogBuild build = build_catalog(config);
  const auto popularity = work_popularity(config, build.works.size());
  std::vector<double> journal_pop(config.n_journals, 0.0);
  for (std::size_t w = 0; w < build.works.size(); ++w)
    journal_pop[build.catalog.work_journal[w]] += popularity[w];
  const double top = *std::max_element(journal_pop.begin(), journal_pop.end());
  Rng rng(config.seed ^ 0xC2B2AE3D27D4EB4Full);
  std::map<std::string, double> out;
  for (std::size_t j = 0; j < config.n_journals; ++j) {
    const double noise = std::exp(0.6 * rng.normal());
    const double value = std::round(30.0 * journal_pop[j] / top * noise * 1000.0) / 1000.0;
    out[build.catalog.journals[j].issn] = std::max(value, 0.001);
  }
  return out;
}

}  // namespace usagelog
