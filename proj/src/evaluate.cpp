#include <bit>
#include <cmath>
#include <set>
#include <sstream>

#include "fhash/errors.hpp"
#include "fhash/learner.hpp"

namespace fhash::learn {

int bucket_index(std::uint64_t training_emails) noexcept {
  return static_cast<int>(std::bit_width(training_emails));
}

std::string bucket_label(int index) {
  if (index < 0 || index > 64) throw InputError("bucket index out of range: " + std::to_string(index));
  if (index == 0) return "[0]";
  if (index == 1) return "[1]";
  const std::uint64_t lo = std::uint64_t{1} << (index - 1);
  const std::uint64_t hi = index == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << index) - 1;
  return "[" + std::to_string(lo) + "," + std::to_string(hi) + "]";
}

UserActivity count_training_emails(const std::vector<Example>& train) {
  UserActivity out;
  for (const auto& ex : train) ++out[ex.user];
  return out;
}

double BucketStats::uncaught_rate() const noexcept {
  return spam == 0 ? 0.0 : static_cast<double>(uncaught) / static_cast<double>(spam);
}

const BucketStats* EvalReport::find(std::string_view label) const {
  for (const auto& b : buckets)
    if (b.label == label) return &b;
  return nullptr;
}

namespace {

nlohmann::json stats_json(const BucketStats& b) {
  return {{"label", b.label},     {"users", b.users},
          {"spam", b.spam},       {"uncaught", b.uncaught},
          {"uncaught_rate", b.uncaught_rate()},
          {"ham", b.ham},         {"false_positives", b.false_positives}};
}

BucketStats stats_from_json(const nlohmann::json& j) {
  BucketStats b;
  b.label = j.at("label").get<std::string>();
  b.users = j.at("users").get<std::uint64_t>();
  b.spam = j.at("spam").get<std::uint64_t>();
  b.uncaught = j.at("uncaught").get<std::uint64_t>();
  b.ham = j.at("ham").get<std::uint64_t>();
  b.false_positives = j.at("false_positives").get<std::uint64_t>();
  return b;
}

// run / baseline; null when only the baseline is zero.
nlohmann::json rate_ratio(double run, double baseline) {
  if (baseline == 0.0) return run == 0.0 ? nlohmann::json(1.0) : nlohmann::json(nullptr);
  return run / baseline;
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["threshold"] = threshold;
  j["fp_rate"] = fp_rate;
  j["overall"] = stats_json(overall);
  j["buckets"] = nlohmann::json::array();
  for (const auto& b : buckets) j["buckets"].push_back(stats_json(b));
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.threshold = j.at("threshold").get<double>();
    r.fp_rate = j.at("fp_rate").get<double>();
    r.overall = stats_from_json(j.at("overall"));
    if (j.contains("buckets"))
      for (const auto& b : j.at("buckets")) r.buckets.push_back(stats_from_json(b));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed evaluation report: ") + e.what());
  }
}

std::string EvalReport::to_csv(const EvalReport* baseline) const {
  std::ostringstream out;
  out.precision(10);
  out << "bucket,users,spam,uncaught,uncaught_rate,ham,false_positives";
  if (baseline) out << ",ratio";
  out << '\n';
  auto row = [&](const BucketStats& b, const BucketStats* base) {
    out << b.label << ',' << b.users << ',' << b.spam << ',' << b.uncaught << ',' << b.uncaught_rate()
        << ',' << b.ham << ',' << b.false_positives;
    if (baseline) {
      out << ',';
      if (base) {
        const auto r = rate_ratio(b.uncaught_rate(), base->uncaught_rate());
        if (!r.is_null()) out << r.get<double>();
      }
    }
    out << '\n';
  };
  for (const auto& b : buckets) row(b, baseline ? baseline->find(b.label) : nullptr);
  row(overall, baseline ? &baseline->overall : nullptr);
  return out.str();
}

EvalReport evaluate(std::span<const double> scores, const std::vector<Example>& test, double threshold,
                    const UserActivity& activity, double fp_rate) {
  if (scores.size() != test.size())
    throw DimensionError("evaluate: " + std::to_string(scores.size()) + " scores for " +
                         std::to_string(test.size()) + " examples");
  std::map<int, BucketStats> by_bucket;
  std::map<int, std::set<std::string_view>> users;
  EvalReport r;
  r.threshold = threshold;
  r.fp_rate = fp_rate;
  r.overall.label = "overall";
  std::set<std::string_view> all_users;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& ex = test[i];
    const auto it = activity.find(ex.user);
    const int k = bucket_index(it == activity.end() ? 0 : it->second);
    BucketStats& b = by_bucket[k];
    users[k].insert(ex.user);
    all_users.insert(ex.user);
    const bool flagged = scores[i] > threshold;
    for (BucketStats* s : {&b, &r.overall}) {
      if (ex.label == corpus::kSpam) {
        ++s->spam;
        if (!flagged) ++s->uncaught;
      } else {
        ++s->ham;
        if (flagged) ++s->false_positives;
      }
    }
  }
  for (auto& [k, b] : by_bucket) {
    b.label = bucket_label(k);
    b.users = users[k].size();
    r.buckets.push_back(b);
  }
  r.overall.users = all_users.size();
  return r;
}

EvalReport evaluate_model(const HashedModel& model, const std::vector<Example>& test,
                          const UserActivity& activity, const FeatureOptions& features, double fp_rate) {
  const auto scores = score_all(model, test, features);
  std::vector<double> ham;
  for (std::size_t i = 0; i < test.size(); ++i)
    if (test[i].label == corpus::kHam) ham.push_back(scores[i]);
  const double theta = calibrate_threshold(ham, fp_rate);
  return evaluate(scores, test, theta, activity, fp_rate);
}

nlohmann::json ratio_report(const EvalReport& run, const EvalReport& baseline) {
  nlohmann::json j;
  j["overall"] = rate_ratio(run.overall.uncaught_rate(), baseline.overall.uncaught_rate());
  j["buckets"] = nlohmann::json::object();
  for (const auto& b : run.buckets) {
    const BucketStats* base = baseline.find(b.label);
    j["buckets"][b.label] = base ? rate_ratio(b.uncaught_rate(), base->uncaught_rate()) : nlohmann::json(nullptr);
  }
  return j;
}

}  // namespace fhash::learn
