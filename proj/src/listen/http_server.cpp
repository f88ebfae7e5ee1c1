#include "easlab/listen/http_server.hpp"

#include <cstdint>

#include "easlab/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace easlab::listen {
namespace {

using nlohmann::json;

int status_for(ServiceErrorCode code) {
  switch (code) {
    case ServiceErrorCode::NotFound: return 404;
    case ServiceErrorCode::BadRequest: return 400;
    case ServiceErrorCode::ReplayExhausted: return 403;
    case ServiceErrorCode::DuplicateResponse: return 409;
  }
  return 500;
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, {{"error", code}, {"message", message}}, status);
}

json public_plan(const SessionPlan& p, const SessionStatus* status) {
  json trials = json::array();
  for (const Trial& t : p.trials) {
    json tj = {{"trial_index", t.trial_index},
               {"utterance_id", t.utterance_id},
               {"noise_id", t.noise_id},
               {"method", t.method},
               {"stimulus_path", "/sessions/" + p.session_id + "/trials/" + std::to_string(t.trial_index) + "/audio"}};
    if (status) {
      tj["plays"] = status->plays[static_cast<std::size_t>(t.trial_index)];
      tj["answered"] = status->responses.count(t.trial_index) > 0;
    }
    trials.push_back(std::move(tj));
  }
  return {{"session_id", p.session_id}, {"participant_id", p.participant_id}, {"group", p.group},
          {"snr_db", p.snr_db},         {"rng_seed", p.rng_seed},             {"trials", trials}};
}

json record_json(const eval::CcrRecord& r) {
  return {{"condition", r.condition},
          {"correct_characters", r.correct_characters},
          {"total_characters", r.total_characters},
          {"ccr_percent", r.ccr_percent()}};
}

// Runs a handler, translating exceptions into JSON errors.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const ServiceError& e) {
    send_error(res, status_for(e.code()), to_string(e.code()), e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, "bad_request", e.what());
  } catch (const InvalidArgument& e) {
    send_error(res, 400, "bad_request", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

int parse_index(const std::string& text) {
  try {
    std::size_t used = 0;
    const int k = std::stoi(text, &used);
    if (used == text.size()) return k;
  } catch (const std::exception&) {
  }
  throw ServiceError(ServiceErrorCode::NotFound, "bad trial index " + text);
}

}  // namespace

HttpServer::HttpServer(ListenService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  httplib::Server& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  s.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      const SessionPlan plan = service_.create_session(
          body.at("participant_id").get<std::string>(), body.at("snr_db").get<double>(),
          body.value("seed", std::uint64_t{1729}), body.value("group", std::string("default")));
      send_json(res, public_plan(plan, nullptr), 201);
    });
  });

  s.Get(R"(/sessions/([0-9a-f]+)/plan)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const SessionStatus st = service_.status(req.matches[1]);
      send_json(res, public_plan(st.plan, &st));
    });
  });

  s.Get(R"(/sessions/([0-9a-f]+)/trials/(-?[0-9]+)/audio)",
        [this](const httplib::Request& req, httplib::Response& res) {
          guarded(res, [&] {
            std::string wav = service_.play(req.matches[1], parse_index(req.matches[2]));
            res.set_header("Cache-Control", "no-store");
            res.set_content(std::move(wav), "audio/wav");
          });
        });

  s.Post(R"(/sessions/([0-9a-f]+)/responses)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      std::string client_ts;
      if (body.contains("client_ts")) {
        const json& ts = body.at("client_ts");
        client_ts = ts.is_string() ? ts.get<std::string>() : ts.dump();
      }
      const TrialScore score = service_.respond(req.matches[1], body.at("trial_index").get<int>(),
                                                body.at("response").get<std::string>(), client_ts);
      json out = record_json(score.record);
      out["trial_index"] = body.at("trial_index");
      out["replays_used"] = score.replays_used;
      send_json(res, out, 201);
    });
  });

  s.Get(R"(/sessions/([0-9a-f]+)/results)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json conditions = json::array();
      for (const auto& [c, rec] : service_.session_results(req.matches[1])) {
        conditions.push_back(record_json(rec));
      }
      send_json(res, {{"session_id", req.matches[1].str()}, {"conditions", conditions}});
    });
  });

  s.Get("/results", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string group = req.has_param("group") ? req.get_param_value("group") : "default";
      const GroupResults r = service_.group_results(group);
      json conditions = json::array();
      for (const ConditionSummary& c : r.conditions) {
        json sessions = json::array();
        for (const auto& [id, rec] : c.sessions) {
          json sj = record_json(rec);
          sj["session_id"] = id;
          sessions.push_back(std::move(sj));
        }
        conditions.push_back({{"condition", c.condition},
                              {"noise_id", c.noise_id},
                              {"method", c.method},
                              {"snr_db", c.snr_db},
                              {"n_sessions", c.n_sessions},
                              {"mean_ccr", c.mean_ccr},
                              {"sem_ccr", c.sem_ccr},
                              {"sessions", sessions}});
      }
      send_json(res, {{"group", r.group}, {"conditions", conditions}});
    });
  });
}

HttpServer::~HttpServer() = default;

bool HttpServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int HttpServer::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpServer::listen_after_bind() { return server_->listen_after_bind(); }

void HttpServer::stop() { server_->stop(); }

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace easlab::listen
