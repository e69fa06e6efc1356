#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "kgalloc/proposals.hpp"
#include "kgalloc/simulator.hpp"

namespace kgalloc {

struct HttpResponse {
  int status = 200;
  std::string body;  // JSON
};

struct ServiceOptions {
  // Steps the simulator on its own while it is running (not paused). Off
  // means the clock only moves through {"action": "step"}.
  bool auto_advance = false;
  std::chrono::milliseconds tick{100};
  std::string proposal_journal;  // empty: proposals kept in memory only
};

/// Owns a simulator and a proposal store. All access goes through handle(),
/// which queues the request for a single worker thread and waits for the
/// answer, so HTTP handlers never touch the simulator directly.
///
/// The simulator starts paused.
class Service {
 public:
  Service(std::unique_ptr<Simulator> sim, ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // `target` is the request path with an optional query string.
  HttpResponse handle(const std::string& method, const std::string& target, const std::string& body = {});

  // Runs `fn` on the worker thread with exclusive access to the simulator.
  void with_simulator(const std::function<void(Simulator&)>& fn);

 private:
  HttpResponse dispatch(const std::string& method, const std::string& target, const std::string& body);
  void worker();
  void enqueue(std::function<void()> job);

  std::unique_ptr<Simulator> sim_;
  ProposalStore proposals_;
  ServiceOptions options_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> jobs_;
  bool stopping_ = false;
  std::thread thread_;
};

// HTTP front end for a Service, with permissive CORS headers for a browser
// client.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  // Port 0 picks a free port. Returns the bound port. Throws Error{Io}.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace kgalloc
