#include "fhash/corpus.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "fhash/errors.hpp"

namespace fhash::corpus {
namespace {

bool is_control(unsigned char c) { return c < 0x20 || c == 0x7f; }

std::vector<std::string> split_tokens(std::string_view field, std::size_t line_no) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < field.size()) {
    while (i < field.size() && field[i] == ' ') ++i;
    std::size_t j = i;
    while (j < field.size() && field[j] != ' ') {
      if (is_control(static_cast<unsigned char>(field[j])))
        throw ParseError(line_no, "token contains a control character");
      ++j;
    }
    if (j > i) out.emplace_back(field.substr(i, j - i));
    i = j;
  }
  return out;
}

bool has_gz_extension(const std::filesystem::path& p) { return p.extension() == ".gz"; }

// Uniform double in [0, 1) from the top 53 bits; std distributions are
// implementation-defined, this is not.
double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(u01(rng) * static_cast<double>(n)));
}

std::size_t sample_cdf(const std::vector<double>& cdf, std::mt19937_64& rng) {
  const double u = u01(rng) * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

std::vector<double> zipf_cdf(std::size_t n, double exponent) {
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    acc += std::pow(static_cast<double>(k + 1), -exponent);
    cdf[k] = acc;
  }
  return cdf;
}

double cdf_mass(const std::vector<double>& cdf, std::size_t k) {
  return (cdf[k] - (k ? cdf[k - 1] : 0.0)) / cdf.back();
}

}  // namespace

CorpusLine parse_line(std::string_view line, std::size_t line_no) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  if (fields.size() != 3 && fields.size() != 4)
    throw ParseError(line_no, "expected 4 tab-separated fields, got " + std::to_string(fields.size()));

  CorpusLine out;
  if (fields[0] == "1" || fields[0] == "+1") {
    out.label = kSpam;
  } else if (fields[0] == "-1") {
    out.label = kHam;
  } else {
    throw ParseError(line_no, "label must be 1 or -1, got \"" + std::string(fields[0]) + "\"");
  }

  if (fields[1].empty()) throw ParseError(line_no, "empty user id");
  for (char c : fields[1])
    if (is_control(static_cast<unsigned char>(c)) || c == ' ')
      throw ParseError(line_no, "user id contains a control character or space");
  out.user = std::string(fields[1]);

  const auto ts = fields[2];
  auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), out.timestamp);
  if (ts.empty() || ec != std::errc() || ptr != ts.data() + ts.size())
    throw ParseError(line_no, "bad timestamp \"" + std::string(ts) + "\"");

  if (fields.size() == 4) out.tokens = split_tokens(fields[3], line_no);
  return out;
}

std::string serialize(const CorpusLine& line) {
  std::string out = line.label == kSpam ? "1" : "-1";
  out.push_back('\t');
  out += line.user;
  out.push_back('\t');
  out += std::to_string(line.timestamp);
  out.push_back('\t');
  for (std::size_t i = 0; i < line.tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += line.tokens[i];
  }
  return out;
}

std::vector<CorpusLine> read_corpus(const std::filesystem::path& path) {
  std::vector<CorpusLine> out;
  std::size_t line_no = 0;
  auto consume = [&](std::string_view l) {
    ++line_no;
    if (l.empty() || l == "\r") return;
    out.push_back(parse_line(l, line_no));
  };

  if (has_gz_extension(path)) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw InputError("cannot open " + path.string());
    std::string pending;
    char buf[1 << 16];
    int n = 0;
    while ((n = gzread(f, buf, sizeof buf)) > 0) {
      pending.append(buf, static_cast<std::size_t>(n));
      std::size_t pos = 0, nl = 0;
      while ((nl = pending.find('\n', pos)) != std::string::npos) {
        consume(std::string_view(pending).substr(pos, nl - pos));
        pos = nl + 1;
      }
      pending.erase(0, pos);
    }
    const bool failed = n < 0;
    gzclose(f);
    if (failed) throw InputError("gzip read error in " + path.string());
    if (!pending.empty()) consume(pending);
    return out;
  }

  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string l;
  while (std::getline(in, l)) consume(l);
  return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<CorpusLine>& lines) {
  if (has_gz_extension(path)) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (!f) throw InputError("cannot write " + path.string());
    for (const auto& l : lines) {
      const std::string s = serialize(l) + '\n';
      if (gzwrite(f, s.data(), static_cast<unsigned>(s.size())) != static_cast<int>(s.size())) {
        gzclose(f);
        throw InputError("gzip write error in " + path.string());
      }
    }
    gzclose(f);
    return;
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& l : lines) out << serialize(l) << '\n';
  if (!out) throw InputError("write error in " + path.string());
}

Split time_split(std::vector<CorpusLine> lines, double train_fraction) {
  if (lines.empty()) throw InputError("time_split: empty corpus");
  if (!(train_fraction > 0 && train_fraction <= 1))
    throw InputError("time_split: train fraction must lie in (0, 1]");
  std::stable_sort(lines.begin(), lines.end(),
                   [](const CorpusLine& a, const CorpusLine& b) { return a.timestamp < b.timestamp; });
  const std::int64_t t_min = lines.front().timestamp;
  const std::int64_t t_max = lines.back().timestamp;

  Split s;
  if (t_min == t_max) {
    s.split_time = t_max + 1;
    s.degenerate = true;
    s.train = std::move(lines);
    return s;
  }
  const double cut = static_cast<double>(t_min) + train_fraction * static_cast<double>(t_max - t_min);
  s.split_time = static_cast<std::int64_t>(std::ceil(cut));
  auto mid = std::partition_point(lines.begin(), lines.end(), [&](const CorpusLine& l) {
    return static_cast<double>(l.timestamp) < cut;
  });
  s.train.assign(std::make_move_iterator(lines.begin()), std::make_move_iterator(mid));
  s.test.assign(std::make_move_iterator(mid), std::make_move_iterator(lines.end()));
  return s;
}

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& what) { throw InputError("generator config: " + what); };
  if (n_users == 0) fail("n_users must be positive");
  if (n_emails == 0) fail("n_emails must be positive");
  if (n_topics < 2) fail("n_topics must be >= 2");
  if (vocab_size < 2 * n_topics) fail("vocab_size must be >= 2 * n_topics");
  if (!(spam_prior > 0 && spam_prior < 1)) fail("spam_prior must lie in (0, 1)");
  if (!(zipf_exponent > 0)) fail("zipf_exponent must be positive");
  if (!(disagreement_rate >= 0 && disagreement_rate < 1)) fail("disagreement_rate must lie in [0, 1)");
  if (!(borderline_fraction >= 0 && borderline_fraction <= 1)) fail("borderline_fraction must lie in [0, 1]");
  if (!(topic_token_rate > 0 && topic_token_rate <= 1)) fail("topic_token_rate must lie in (0, 1]");
  if (!(word_zipf_exponent > 0)) fail("word_zipf_exponent must be positive");
  if (min_length == 0 || max_length < min_length) fail("need 1 <= min_length <= max_length");
  if (days <= 0) fail("days must be positive");
}

GeneratorModel::GeneratorModel(const GeneratorConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(cfg_.seed);

  const std::size_t T = cfg_.n_topics;
  const auto n_spam = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg_.spam_prior * static_cast<double>(T))), 1, T - 1);
  const std::size_t n_ham = T - n_spam;

  n_background_ = cfg_.vocab_size / 5;
  const std::size_t per_topic = (cfg_.vocab_size - n_background_) / T;
  for (std::size_t t = 0; t < T; ++t) {
    const bool spam = t < n_spam;
    const std::size_t rank = spam ? t : t - n_spam;
    const std::size_t group = spam ? n_spam : n_ham;
    TopicInfo info;
    info.consensus_label = spam ? kSpam : kHam;
    // The first borderline_fraction of each group is borderline.
    info.borderline = static_cast<double>(rank) <
                      cfg_.borderline_fraction * static_cast<double>(group) - 1e-12;
    info.popularity = (spam ? cfg_.spam_prior : 1.0 - cfg_.spam_prior) / static_cast<double>(group);
    info.first_token = n_background_ + t * per_topic;
    info.n_tokens = t + 1 == T ? cfg_.vocab_size - info.first_token : per_topic;
    topics_.push_back(info);
  }

  double acc = 0.0;
  for (const auto& t : topics_) topic_cdf_.push_back(acc += t.popularity);
  user_cdf_ = zipf_cdf(cfg_.n_users, cfg_.zipf_exponent);
  background_cdf_ = zipf_cdf(n_background_, cfg_.word_zipf_exponent);
  for (const auto& t : topics_) word_cdf_.push_back(zipf_cdf(t.n_tokens, cfg_.word_zipf_exponent));

  flips_.assign(cfg_.n_users, std::vector<bool>(T, false));
  for (std::size_t u = 0; u < cfg_.n_users; ++u)
    for (std::size_t t = 0; t < T; ++t)
      if (topics_[t].borderline) flips_[u][t] = u01(rng) < cfg_.disagreement_rate;
}

std::string GeneratorModel::token_name(std::size_t id) { return "w" + std::to_string(id); }
std::string GeneratorModel::user_name(std::size_t rank) { return "u" + std::to_string(rank); }

double GeneratorModel::token_probability(std::size_t topic, std::size_t id) const {
  const TopicInfo& t = topics_.at(topic);
  double p = 0.0;
  if (id < n_background_) p += (1.0 - cfg_.topic_token_rate) * cdf_mass(background_cdf_, id);
  if (id >= t.first_token && id < t.first_token + t.n_tokens)
    p += cfg_.topic_token_rate * cdf_mass(word_cdf_[topic], id - t.first_token);
  return p;
}

double GeneratorModel::user_probability(std::size_t rank) const { return cdf_mass(user_cdf_, rank); }

bool GeneratorModel::flipped(std::size_t rank, std::size_t topic) const {
  return flips_.at(rank).at(topic);
}

int GeneratorModel::user_label(std::size_t rank, std::size_t topic) const {
  const int c = topics_.at(topic).consensus_label;
  return flipped(rank, topic) ? -c : c;
}

GeneratedCorpus generate(const GeneratorConfig& cfg) {
  const GeneratorModel model(cfg);
  // Independent stream from the one that drew the flips.
  std::mt19937_64 rng(cfg.seed ^ 0xa0761d6478bd642full);
  const std::int64_t span = cfg.days * kSecondsPerDay;

  std::vector<CorpusLine> lines;
  std::vector<std::size_t> topics;
  lines.reserve(cfg.n_emails);
  topics.reserve(cfg.n_emails);
  for (std::size_t e = 0; e < cfg.n_emails; ++e) {
    const std::size_t user = sample_cdf(model.user_cdf_, rng);
    const std::size_t topic = sample_cdf(model.topic_cdf_, rng);
    const TopicInfo& info = model.topics_[topic];
    CorpusLine line;
    line.label = model.user_label(user, topic);
    line.user = GeneratorModel::user_name(user);
    line.timestamp = static_cast<std::int64_t>(uniform_index(rng, static_cast<std::size_t>(span)));
    const std::size_t len = cfg.min_length + uniform_index(rng, cfg.max_length - cfg.min_length + 1);
    line.tokens.reserve(len);
    for (std::size_t k = 0; k < len; ++k) {
      std::size_t id;
      if (u01(rng) < cfg.topic_token_rate) {
        id = info.first_token + sample_cdf(model.word_cdf_[topic], rng);
      } else {
        id = sample_cdf(model.background_cdf_, rng);
      }
      line.tokens.push_back(GeneratorModel::token_name(id));
    }
    lines.push_back(std::move(line));
    topics.push_back(topic);
  }

  std::vector<std::size_t> order(lines.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lines[a].timestamp < lines[b].timestamp; });
  GeneratedCorpus out;
  out.lines.reserve(lines.size());
  out.topic_of.reserve(lines.size());
  for (std::size_t i : order) {
    out.lines.push_back(std::move(lines[i]));
    out.topic_of.push_back(topics[i]);
  }
  return out;
}

void write_truth(const std::filesystem::path& path, const GeneratorModel& model) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t u = 0; u < model.config().n_users; ++u)
    for (std::size_t t = 0; t < model.topics().size(); ++t)
      out << GeneratorModel::user_name(u) << '\t' << t << '\t' << model.user_label(u, t) << '\n';
}

}  // namespace fhash::corpus
