#pragma once

namespace gudg {
int cli_main(int argc, char** argv);
}
