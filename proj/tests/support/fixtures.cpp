#include "fixtures.hpp"

#include <fstream>
#include <sstream>

#include "usagelog/crypto.hpp"
#include "usagelog/time.hpp"

namespace testing_support {

using namespace usagelog;
namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  for (;;) {
    path_ = fs::temp_directory_path() / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    if (fs::create_directories(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

UsageEvent sample_event() {
  UsageEvent e;
  e.event_id = *Uuid::from_urn("urn:UUID:58f202ac-22cf-11d1-b12d-002035b29062");
  e.event_timestamp = *parse_utc("2005-11-11T17:45:08Z");
  e.referent.identifiers = {"info:doi/10.1016/j.ipm.2005.03.024"};
  ReferentMetadata m;
  m.atitle = "Toward alternative metrics of journal impact";
  m.jtitle = "Information Processing and Management";
  e.referent.metadata = m;
  e.requester.identifiers = {"urn:ip:63.236.2.100"};
  e.service_type = ServiceTypeFlags::of(ServiceKind::FullText);
  e.resolver.identifiers = {"http://sfx.example.org/menu"};
  e.referrer.identifiers = {"info:sid/elsevier.com:scopus"};
  return e;
}

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

bool coin(std::mt19937_64& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

std::string random_uri(std::mt19937_64& rng) {
  static const std::vector<std::string> schemes{"info:doi/10.", "info:pmid/", "urn:ip:10.0.", "http://x.org/",
                                                "info:sid/", "urn:isbn:"};
  std::string s = schemes[pick(rng, schemes.size())];
  const std::size_t n = 1 + pick(rng, 12);
  static const std::string chars = "abcdefghijklmnopqrstuvwxyz0123456789./-_&<>%";
  for (std::size_t i = 0; i < n; ++i) s += chars[pick(rng, chars.size())];
  return s;
}

std::optional<std::string> maybe_text(std::mt19937_64& rng) {
  if (!coin(rng, 0.6)) return std::nullopt;
  return random_text(rng, 1, 40);
}

EntityDescriptor random_entity(std::mt19937_64& rng, bool require_id) {
  EntityDescriptor d;
  const std::size_t ids = (require_id ? 1 : 0) + pick(rng, 3);
  for (std::size_t i = 0; i < ids; ++i) d.identifiers.push_back(random_uri(rng));
  if (coin(rng, 0.2)) d.private_data = random_text(rng, 1, 30);
  return d;
}

}  // namespace

std::string random_text(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len) {
  static const std::vector<std::string> atoms{"a", "b", "Z", "q", " ", "&", "<", ">", "\"", "'", "é", "ß",
                                              "中", "\t", "\n", "\r", "x", "7", "—", "]]>", "😀", "%"};
  const std::size_t n = min_len + pick(rng, max_len - min_len + 1);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += atoms[pick(rng, atoms.size())];
  return s;
}

Uuid random_uuid(std::mt19937_64& rng) { return uuid_v4_from(rng(), rng()); }

UsageEvent random_event_at(std::mt19937_64& rng, const Uuid& id, UtcTime when) {
  UsageEvent e;
  e.event_id = id;
  e.event_timestamp = when;
  e.referent = random_entity(rng, false);
  if (e.referent.identifiers.empty() || coin(rng, 0.7)) {
    ReferentMetadata m;
    static const std::vector<std::string> genres{"article", "proceeding", "bookitem", "preprint"};
    if (coin(rng)) m.genre = genres[pick(rng, genres.size())];
    m.atitle = maybe_text(rng);
    m.jtitle = maybe_text(rng);
    if (coin(rng)) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04zu-%03zu%c", pick(rng, 10000), pick(rng, 1000),
                    coin(rng, 0.1) ? 'X' : static_cast<char>('0' + pick(rng, 10)));
      m.issn = buf;
    }
    if (coin(rng)) m.volume = std::to_string(1 + pick(rng, 99));
    if (coin(rng)) m.issue = std::to_string(1 + pick(rng, 12));
    if (coin(rng)) m.spage = std::to_string(1 + pick(rng, 999));
    if (coin(rng)) m.epage = std::to_string(1000 + pick(rng, 999));
    if (coin(rng)) m.date = coin(rng) ? std::to_string(1990 + pick(rng, 20)) : "2004-05-17";
    if (coin(rng, 0.3)) m.doi = "10.1000/" + std::to_string(pick(rng, 100000));
    if (m.empty()) m.atitle = "fallback";
    e.referent.metadata = m;
  }
  if (coin(rng, 0.3)) e.referring_entity = random_entity(rng, true);
  e.requester = random_entity(rng, true);
  static const std::vector<ServiceKind> kinds{ServiceKind::FullText, ServiceKind::Abstract, ServiceKind::Citation,
                                              ServiceKind::Holding};
  do {
    for (auto k : kinds)
      if (coin(rng, 0.3)) e.service_type.kinds.insert(k);
    if (coin(rng, 0.15)) e.service_type.other.insert("svc" + std::to_string(pick(rng, 100)));
  } while (e.service_type.empty());
  e.resolver = random_entity(rng, true);
  e.referrer = random_entity(rng, true);
  return e;
}

UsageEvent random_event(std::mt19937_64& rng) {
  const auto when = UtcTime(std::chrono::seconds(946684800 + static_cast<std::int64_t>(pick(rng, 600'000'000))));
  return random_event_at(rng, random_uuid(rng), when);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_file(const fs::path& p) {
  const auto text = read_file(p);
  return crypto::hex(crypto::sha256(text));
}

}  // namespace testing_support
