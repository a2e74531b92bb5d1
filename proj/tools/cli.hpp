#pragma once

#include <chrono>
#include <functional>
#include <iosfwd>

#include "rtp_arb/ingest.hpp"

namespace rtp_arb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Injection points for the network-facing `fetch` subcommand.
struct Services {
  HttpGet http = http_get;
  std::function<void(std::chrono::milliseconds)> sleep;
};

// Entry point behind the rtp-arb executable. Subcommands: fetch, train,
// eval, cross-test, oracle, plot. Returns 0 on success, 1 on runtime or
// data errors, 2 on usage errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const Services& services = {});

}  // namespace rtp_arb::cli
