// Copyright 2026 The svcemu Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// emulator serve --config <file> [--endpoints N] [--base-port P]
//                [--faults max-delay-ms=D,drop=Q,seed=S]

#include <signal.h>
#include <time.h>

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "svcemu/fleet.hpp"

namespace {

bool wait_for_signal(const sigset_t& set, std::chrono::milliseconds timeout) {
  timespec ts{static_cast<time_t>(timeout.count() / 1000), static_cast<long>((timeout.count() % 1000) * 1000000)};
  for (;;) {
    int sig = ::sigtimedwait(&set, nullptr, &ts);
    if (sig > 0) return true;
    if (errno == EINTR) continue;
    return false;  // EAGAIN: timed out
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emulates a fleet of LDAP directory endpoints"};
  app.require_subcommand(1);

  auto* serve = app.add_subcommand("serve", "Start the fleet and serve until SIGTERM/SIGINT");
  std::string config_path;
  std::optional<std::size_t> endpoints;
  std::optional<int> base_port;
  std::string faults;
  serve->add_option("--config", config_path, "JSON fleet configuration")->check(CLI::ExistingFile);
  serve->add_option("--endpoints", endpoints, "Override endpoint_count");
  serve->add_option("--base-port", base_port, "Override base_port");
  serve->add_option("--faults", faults, "Override fault policy: max-delay-ms=D,drop=Q,seed=S");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : svcemu::kExitConfig;
  }

  svcemu::FleetConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = svcemu::load_config(config_path);
    } else if (!endpoints) {
      std::cerr << "config error: --config or --endpoints is required\n";
      return svcemu::kExitConfig;
    }
    if (endpoints) cfg.endpoint_count = *endpoints;
    if (base_port) cfg.base_port = *base_port;
    if (!faults.empty()) svcemu::apply_fault_override(faults, cfg.faults);
    cfg.validate();
  } catch (const svcemu::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return svcemu::kExitConfig;
  }

  // Block the shutdown signals before any loop thread exists so that only
  // sigtimedwait below ever sees them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGTERM);
  sigaddset(&set, SIGINT);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  ::signal(SIGPIPE, SIG_IGN);

  return svcemu::run_fleet(cfg, std::cout, std::cerr,
                           [&set](std::chrono::milliseconds t) { return wait_for_signal(set, t); });
}
