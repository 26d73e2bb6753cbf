#pragma once

// HTTP facade over solve, wind sampling and hazard clustering. Handlers are
// plain functions of the request body so they can be exercised without a socket.

#include "cruise/io.hpp"

#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace cruise::service {

struct Options {
    std::string host = "0.0.0.0";
    int port = 8080;
    int workers = 0;             // 0 = hardware concurrency
    double solve_time_cap = 30.0;  // wall seconds per /solve
    std::string cors_origin = "*";
};

struct Reply {
    int status = 200;
    io::json body;
};

Reply health();
Reply solve(const std::string& body, bool full, const Options& options);
Reply wind_sample(const std::string& body);
Reply hazards_cluster(const std::string& body);

/// Server with every route, CORS headers and a bounded worker pool installed.
std::unique_ptr<httplib::Server> make_server(const Options& options);

} // namespace cruise::service
