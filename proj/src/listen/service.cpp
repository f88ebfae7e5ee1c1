#include "easlab/listen/service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include "easlab/error.hpp"
#include "json.hpp"

namespace easlab::listen {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string new_session_id() {
  std::random_device rd;
  char buf[33];
  std::snprintf(buf, sizeof buf, "%08x%08x%08x%08x", rd(), rd(), rd(), rd());
  return buf;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void append_line(const fs::path& path, const json& line) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to session log " + path.string());
  out << line.dump() << '\n';
  out.flush();
  if (!out) throw IoError("failed appending to session log " + path.string());
}

json trial_json(const Trial& t) {
  return {{"trial_index", t.trial_index}, {"utterance_id", t.utterance_id}, {"noise_id", t.noise_id},
          {"method", t.method},           {"mix_seed", t.mix_seed},         {"stimulus_key", t.stimulus_key}};
}

json plan_to_json(const SessionPlan& p) {
  json trials = json::array();
  for (const Trial& t : p.trials) trials.push_back(trial_json(t));
  return {{"session_id", p.session_id}, {"participant_id", p.participant_id}, {"group", p.group},
          {"snr_db", p.snr_db},         {"rng_seed", p.rng_seed},             {"trials", trials}};
}

SessionPlan plan_from_json(const json& j) {
  SessionPlan p;
  p.session_id = j.at("session_id").get<std::string>();
  p.participant_id = j.at("participant_id").get<std::string>();
  p.group = j.at("group").get<std::string>();
  p.snr_db = j.at("snr_db").get<double>();
  p.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  for (const json& t : j.at("trials")) {
    p.trials.push_back({t.at("trial_index").get<int>(), t.at("utterance_id").get<std::string>(),
                        t.at("noise_id").get<std::string>(), t.at("method").get<std::string>(),
                        t.at("mix_seed").get<std::uint64_t>(), t.at("stimulus_key").get<std::string>()});
  }
  return p;
}

const Trial& trial_at(const SessionPlan& plan, int index) {
  if (index < 0 || index >= static_cast<int>(plan.trials.size())) {
    throw ServiceError(ServiceErrorCode::NotFound, "trial " + std::to_string(index) + " out of range");
  }
  return plan.trials[static_cast<std::size_t>(index)];
}

}  // namespace

const char* to_string(ServiceErrorCode code) {
  switch (code) {
    case ServiceErrorCode::NotFound: return "not_found";
    case ServiceErrorCode::BadRequest: return "bad_request";
    case ServiceErrorCode::ReplayExhausted: return "replay_exhausted";
    case ServiceErrorCode::DuplicateResponse: return "duplicate_response";
  }
  return "error";
}

std::string plan_json(const SessionPlan& plan) { return plan_to_json(plan).dump(); }

SessionPlan parse_plan_json(const std::string& text) {
  try {
    return plan_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed session plan: ") + e.what());
  }
}

ListenService::ListenService(fs::path data_dir, eval::Manifest manifest, eval::MethodResources resources,
                             vocoder::EasVocoderConfig vocoder, ListenConfig config)
    : data_dir_(std::move(data_dir)),
      manifest_(std::move(manifest)),
      config_(std::move(config)),
      cache_(data_dir_ / "stimuli", manifest_, std::move(resources), std::move(vocoder)) {
  config_.validate();
  cache_.check_methods(config_.methods);
  fs::create_directories(data_dir_ / "sessions");
  std::vector<fs::path> logs;
  for (const auto& e : fs::directory_iterator(data_dir_ / "sessions")) {
    if (e.path().extension() == ".jsonl") logs.push_back(e.path());
  }
  std::sort(logs.begin(), logs.end());
  for (const fs::path& p : logs) replay_log(p);
}

void ListenService::replay_log(const fs::path& path) {
  std::istringstream in(read_file(path));
  auto s = std::make_shared<Session>();
  s->log_path = path;
  std::string line;
  bool have_plan = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      // A crash can leave a torn final line; anything else is corruption.
      if (in.peek() == EOF) break;
      throw IoError("corrupt session log " + path.string());
    }
    const std::string type = j.at("type").get<std::string>();
    if (type == "plan") {
      s->state.plan = plan_from_json(j.at("plan"));
      s->state.plays.assign(s->state.plan.trials.size(), 0);
      have_plan = true;
    } else if (!have_plan) {
      throw IoError("session log without a plan line: " + path.string());
    } else if (type == "play") {
      const int k = j.at("trial_index").get<int>();
      trial_at(s->state.plan, k);
      ++s->state.plays[static_cast<std::size_t>(k)];
    } else if (type == "response") {
      TrialResponse r;
      r.trial_index = j.at("trial_index").get<int>();
      r.response = j.at("response").get<std::string>();
      r.replays_used = j.at("replays_used").get<int>();
      r.client_ts = j.value("client_ts", "");
      r.server_ts = j.value("server_ts", "");
      trial_at(s->state.plan, r.trial_index);
      s->state.responses.emplace(r.trial_index, std::move(r));
    }
  }
  if (!have_plan) return;
  sessions_[s->state.plan.session_id] = std::move(s);
}

std::shared_ptr<ListenService::Session> ListenService::find(const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw ServiceError(ServiceErrorCode::NotFound, "unknown session " + session_id);
  return it->second;
}

SessionPlan ListenService::create_session(const std::string& participant_id, double snr_db,
                                          std::uint64_t seed, const std::string& group) {
  SessionPlan plan;
  try {
    plan = plan_session(manifest_, config_, participant_id, snr_db, seed);
  } catch (const InvalidArgument& e) {
    throw ServiceError(ServiceErrorCode::BadRequest, e.what());
  }
  plan.group = group.empty() ? "default" : group;
  render_plan(plan, cache_);

  auto s = std::make_shared<Session>();
  std::unique_lock lock(sessions_mutex_);
  do {
    plan.session_id = new_session_id();
  } while (sessions_.count(plan.session_id));
  s->log_path = data_dir_ / "sessions" / (plan.session_id + ".jsonl");
  append_line(s->log_path, {{"type", "plan"}, {"plan", plan_to_json(plan)}});
  s->state.plan = plan;
  s->state.plays.assign(plan.trials.size(), 0);
  sessions_[plan.session_id] = std::move(s);
  return plan;
}

SessionPlan ListenService::plan(const std::string& session_id) const { return status(session_id).plan; }

SessionStatus ListenService::status(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  return s->state;
}

std::string ListenService::play(const std::string& session_id, int trial_index) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  const Trial& t = trial_at(s->state.plan, trial_index);
  int& plays = s->state.plays[static_cast<std::size_t>(trial_index)];
  if (plays >= config_.max_plays) {
    throw ServiceError(ServiceErrorCode::ReplayExhausted,
                       "trial " + std::to_string(trial_index) + " already played " +
                           std::to_string(plays) + " times");
  }
  // Read before counting so a missing stimulus never burns a play.
  const fs::path wav = cache_.ensure(t, s->state.plan.snr_db);
  std::string bytes = read_file(wav);
  append_line(s->log_path, {{"type", "play"}, {"trial_index", trial_index}, {"server_ts", utc_now()}});
  ++plays;
  return bytes;
}

TrialScore ListenService::respond(const std::string& session_id, int trial_index,
                                  const std::string& response, const std::string& client_ts) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  const Trial& t = trial_at(s->state.plan, trial_index);
  if (s->state.responses.count(trial_index)) {
    throw ServiceError(ServiceErrorCode::DuplicateResponse,
                       "trial " + std::to_string(trial_index) + " already answered");
  }
  TrialScore score;
  try {
    score.record = eval::ccr(manifest_.utterance(t.utterance_id).transcript, response,
                             condition_id(t.noise_id, t.method));
  } catch (const InvalidArgument& e) {
    throw ServiceError(ServiceErrorCode::BadRequest, e.what());
  }
  TrialResponse r;
  r.trial_index = trial_index;
  r.response = response;
  r.replays_used = std::clamp(s->state.plays[static_cast<std::size_t>(trial_index)] - 1, 0,
                              config_.max_plays - 1);
  r.client_ts = client_ts;
  r.server_ts = utc_now();
  append_line(s->log_path, {{"type", "response"},
                            {"trial_index", r.trial_index},
                            {"response", r.response},
                            {"replays_used", r.replays_used},
                            {"client_ts", r.client_ts},
                            {"server_ts", r.server_ts}});
  score.replays_used = r.replays_used;
  s->state.responses.emplace(trial_index, std::move(r));
  return score;
}

std::map<std::string, eval::CcrRecord> ListenService::results_locked(const Session& s) const {
  std::map<std::string, std::vector<eval::CcrRecord>> by_condition;
  for (const auto& [k, r] : s.state.responses) {
    const Trial& t = trial_at(s.state.plan, k);
    const std::string c = condition_id(t.noise_id, t.method);
    by_condition[c].push_back(eval::ccr(manifest_.utterance(t.utterance_id).transcript, r.response, c));
  }
  std::map<std::string, eval::CcrRecord> out;
  for (const auto& [c, records] : by_condition) out.emplace(c, eval::pool(records, c));
  return out;
}

std::map<std::string, eval::CcrRecord> ListenService::session_results(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  return results_locked(*s);
}

GroupResults ListenService::group_results(const std::string& group) const {
  std::vector<std::shared_ptr<Session>> members;
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [id, s] : sessions_) members.push_back(s);
  }
  std::map<std::pair<double, std::string>, ConditionSummary> acc;
  for (const auto& s : members) {
    std::lock_guard lock(s->mutex);
    if (s->state.plan.group != group) continue;
    for (const auto& [c, rec] : results_locked(*s)) {
      ConditionSummary& sum = acc[{s->state.plan.snr_db, c}];
      sum.condition = c;
      sum.snr_db = s->state.plan.snr_db;
      sum.sessions.emplace_back(s->state.plan.session_id, rec);
    }
  }
  GroupResults out;
  out.group = group;
  for (auto& [key, sum] : acc) {
    const auto slash = sum.condition.find('/');
    sum.noise_id = sum.condition.substr(0, slash);
    sum.method = sum.condition.substr(slash + 1);
    sum.n_sessions = static_cast<int>(sum.sessions.size());
    double mean = 0.0;
    for (const auto& [id, rec] : sum.sessions) mean += rec.ccr_percent();
    mean /= sum.n_sessions;
    double ss = 0.0;
    for (const auto& [id, rec] : sum.sessions) ss += (rec.ccr_percent() - mean) * (rec.ccr_percent() - mean);
    sum.mean_ccr = mean;
    sum.sem_ccr = sum.n_sessions > 1 ? std::sqrt(ss / (sum.n_sessions - 1)) / std::sqrt(sum.n_sessions) : 0.0;
    out.conditions.push_back(std::move(sum));
  }
  return out;
}

std::vector<std::string> ListenService::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, s] : sessions_) ids.push_back(id);
  return ids;
}

}  // namespace easlab::listen
