#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fhash::corpus {

inline constexpr int kSpam = 1;
inline constexpr int kHam = -1;
inline constexpr std::int64_t kSecondsPerDay = 86400;

// One email: `label<TAB>user<TAB>timestamp<TAB>tok1 tok2 ...`.
struct CorpusLine {
  int label = kHam;  // spam = +1, not-spam = -1
  std::string user;
  std::int64_t timestamp = 0;
  std::vector<std::string> tokens;

  friend bool operator==(const CorpusLine&, const CorpusLine&) = default;
};

// Throws ParseError carrying `line_no` on a bad field count, label,
// timestamp, empty user, or a token containing a control character. An empty
// token field is accepted (test-time emails may have no tokens).
CorpusLine parse_line(std::string_view line, std::size_t line_no = 1);
std::string serialize(const CorpusLine& line);

// Files ending in ".gz" are read/written through zlib.
std::vector<CorpusLine> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, const std::vector<CorpusLine>& lines);

struct Split {
  std::vector<CorpusLine> train;
  std::vector<CorpusLine> test;
  std::int64_t split_time = 0;  // train: t < split_time
  bool degenerate = false;      // zero time range, everything went to train
};

// Splits at t_min + train_fraction * (t_max - t_min); both halves come back
// sorted by timestamp (stable). Throws InputError on an empty corpus.
Split time_split(std::vector<CorpusLine> lines, double train_fraction = 10.0 / 14.0);

struct GeneratorConfig {
  std::size_t n_users = 10000;
  std::size_t n_emails = 100000;
  std::size_t vocab_size = 50000;
  double spam_prior = 0.5;
  double zipf_exponent = 1.1;      // user activity
  double disagreement_rate = 0.3;  // per-user flip probability of a borderline topic
  std::uint64_t seed = 1;

  std::size_t n_topics = 24;
  double borderline_fraction = 0.5;
  double topic_token_rate = 0.4;  // per token: topic word vs. background word
  double word_zipf_exponent = 1.0;
  std::size_t min_length = 10;
  std::size_t max_length = 30;
  std::int64_t days = 14;

  // Throws InputError on an invalid configuration.
  void validate() const;
};

struct GeneratedCorpus {
  std::vector<CorpusLine> lines;      // sorted by timestamp
  std::vector<std::size_t> topic_of;  // topic of lines[i]
};

struct TopicInfo {
  int consensus_label;
  bool borderline;
  double popularity;
  std::size_t first_token;  // topic words occupy [first_token, first_token + n_tokens)
  std::size_t n_tokens;
};

// The generative model behind generate(): topics, word distributions, user
// activity and the per-user label flips.
class GeneratorModel {
 public:
  explicit GeneratorModel(const GeneratorConfig& cfg);

  const GeneratorConfig& config() const noexcept { return cfg_; }
  const std::vector<TopicInfo>& topics() const noexcept { return topics_; }
  std::size_t background_tokens() const noexcept { return n_background_; }

  static std::string token_name(std::size_t id);
  static std::string user_name(std::size_t rank);

  // Probability that one token of an email on `topic` is word `id`.
  double token_probability(std::size_t topic, std::size_t id) const;
  // Probability that an email comes from user `rank` (0-based).
  double user_probability(std::size_t rank) const;
  // Label user `rank` assigns to `topic`.
  int user_label(std::size_t rank, std::size_t topic) const;
  bool flipped(std::size_t rank, std::size_t topic) const;

 private:
  friend GeneratedCorpus generate(const GeneratorConfig& cfg);

  GeneratorConfig cfg_;
  std::size_t n_background_ = 0;
  std::vector<TopicInfo> topics_;
  // Cumulative (unnormalized) weights for inverse-CDF sampling.
  std::vector<double> topic_cdf_;
  std::vector<double> user_cdf_;
  std::vector<double> background_cdf_;
  std::vector<std::vector<double>> word_cdf_;  // per topic, over its own words
  std::vector<std::vector<bool>> flips_;       // [user][topic]
};

// Deterministic given cfg (including seed).
GeneratedCorpus generate(const GeneratorConfig& cfg);

// Ground truth `user<TAB>topic<TAB>label` for every user and topic.
void write_truth(const std::filesystem::path& path, const GeneratorModel& model);

}  // namespace fhash::corpus
