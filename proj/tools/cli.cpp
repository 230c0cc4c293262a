#include "cli.hpp"

#include <CLI11.hpp>

namespace gudg {

int cli_main(int argc, char** argv) {
    CLI::App app{"Geodesic unit-disk graph shortest paths in simple polygons"};
    app.require_subcommand(1);
    // Subcommands land here as modules come online.
    CLI11_PARSE(app, argc, argv);
    return 0;
}

}  // namespace gudg
