#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "usagelog/model.hpp"

namespace testing_support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "usagelog");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// The sample event: DOI referent with atitle/jtitle, requester
/// urn:ip:63.236.2.100, full-text, SFX resolver, Scopus referrer.
usagelog::UsageEvent sample_event();

/// Random valid event exercising every optional field, XML-sensitive
/// characters and non-ASCII text.
usagelog::UsageEvent random_event(std::mt19937_64& rng);

std::string random_text(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len);

/// Event with a given id and timestamp, otherwise random.
usagelog::UsageEvent random_event_at(std::mt19937_64& rng, const usagelog::Uuid& id,
                                     usagelog::UtcTime when);

usagelog::Uuid random_uuid(std::mt19937_64& rng);

std::string read_file(const std::filesystem::path& p);
std::string sha256_file(const std::filesystem::path& p);

}  // namespace testing_support
