#include "cruise/service.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    cruise::service::Options opts;
    if (const char* p = std::getenv("CRUISEOPT_PORT")) opts.port = std::atoi(p);

    CLI::App app{"HTTP service for cruise trajectory solves"};
    app.add_option("--host", opts.host);
    app.add_option("--port", opts.port, "listen port (default $CRUISEOPT_PORT or 8080)")->check(CLI::Range(1, 65535));
    app.add_option("--workers", opts.workers, "concurrent request limit (0 = cores)");
    app.add_option("--time-cap", opts.solve_time_cap, "per-solve wall-time cap [s]");
    app.add_option("--cors-origin", opts.cors_origin);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    auto server = cruise::service::make_server(opts);
    std::cout << "listening on " << opts.host << ":" << opts.port << std::endl;
    if (!server->listen(opts.host, opts.port)) {
        std::cerr << "cannot bind " << opts.host << ":" << opts.port << '\n';
        return 2;
    }
    return 0;
}
