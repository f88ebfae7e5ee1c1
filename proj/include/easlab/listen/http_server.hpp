#pragma once

#include <memory>
#include <string>

#include "easlab/listen/service.hpp"

namespace httplib {
class Server;
}

namespace easlab::listen {

// Routes:
//   POST /sessions                         {participant_id, snr_db, seed?, group?}
//   GET  /sessions/{id}/plan
//   GET  /sessions/{id}/trials/{k}/audio   WAV bytes; counts a play
//   POST /sessions/{id}/responses          {trial_index, response, client_ts?}
//   GET  /sessions/{id}/results
//   GET  /results?group=...
// Errors come back as {"error": code, "message": text}.
class HttpServer {
 public:
  explicit HttpServer(ListenService& service);
  ~HttpServer();

  // Binds and serves until stop(); returns false when binding fails.
  bool listen(const std::string& host, int port);
  // Binds to a free port; returns it, or -1.
  int bind_any(const std::string& host);
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  ListenService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace easlab::listen
