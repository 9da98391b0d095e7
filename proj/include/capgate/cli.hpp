#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace capgate {

enum ExitCode : int {
  kExitOk = 0,
  kExitRuntime = 1,
  kExitUsage = 2,
};

struct CliHooks {
  // Called once `serve` has bound its port, before it starts blocking.
  std::function<void(httplib::Server&)> on_server_ready;
};

/// Runs one CLI invocation. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const CliHooks& hooks = {});

}  // namespace capgate
