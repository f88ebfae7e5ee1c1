#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "easlab/eval/ccr.hpp"
#include "easlab/listen/session.hpp"

namespace easlab::listen {

enum class ServiceErrorCode { NotFound, BadRequest, ReplayExhausted, DuplicateResponse };

class ServiceError : public std::runtime_error {
 public:
  ServiceError(ServiceErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ServiceErrorCode code() const { return code_; }

 private:
  ServiceErrorCode code_;
};

const char* to_string(ServiceErrorCode code);

struct TrialResponse {
  int trial_index = 0;
  std::string response;
  int replays_used = 0;
  std::string client_ts;
  std::string server_ts;
};

struct TrialScore {
  eval::CcrRecord record;  // condition is noise/method
  int replays_used = 0;
};

struct ConditionSummary {
  std::string condition;
  std::string noise_id;
  std::string method;
  double snr_db = 0.0;
  int n_sessions = 0;
  double mean_ccr = 0.0;
  double sem_ccr = 0.0;  // sample sd / sqrt(n); 0 when n = 1
  std::vector<std::pair<std::string, eval::CcrRecord>> sessions;  // session id -> pooled record
};

struct GroupResults {
  std::string group;
  std::vector<ConditionSummary> conditions;  // sorted by (snr, condition)
};

struct SessionStatus {
  SessionPlan plan;
  std::vector<int> plays;                        // per trial
  std::map<int, TrialResponse> responses;        // by trial index
};

// One append-only JSON-lines log per session under data_dir/sessions;
// rendered stimuli under data_dir/stimuli. Restarting replays the logs.
class ListenService {
 public:
  ListenService(std::filesystem::path data_dir, eval::Manifest manifest,
                eval::MethodResources resources, vocoder::EasVocoderConfig vocoder,
                ListenConfig config = {});

  SessionPlan create_session(const std::string& participant_id, double snr_db,
                             std::uint64_t seed, const std::string& group = "default");
  SessionPlan plan(const std::string& session_id) const;
  SessionStatus status(const std::string& session_id) const;

  // Counts a play and returns the WAV bytes; refuses once the budget is spent.
  std::string play(const std::string& session_id, int trial_index);

  TrialScore respond(const std::string& session_id, int trial_index, const std::string& response,
                     const std::string& client_ts = {});

  // Per-condition pooled CCR of one session, keyed by condition id.
  std::map<std::string, eval::CcrRecord> session_results(const std::string& session_id) const;
  GroupResults group_results(const std::string& group) const;

  std::vector<std::string> session_ids() const;
  const ListenConfig& config() const { return config_; }

 private:
  struct Session {
    mutable std::mutex mutex;
    SessionStatus state;
    std::filesystem::path log_path;
  };

  std::shared_ptr<Session> find(const std::string& session_id) const;
  void replay_log(const std::filesystem::path& path);
  std::map<std::string, eval::CcrRecord> results_locked(const Session& s) const;

  std::filesystem::path data_dir_;
  eval::Manifest manifest_;
  ListenConfig config_;
  StimulusCache cache_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

std::string plan_json(const SessionPlan& plan);
SessionPlan parse_plan_json(const std::string& text);

}  // namespace easlab::listen
