#include <algorithm>
#include <iostream>

#include "common.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Visual-context ASR error correction toolkit"};
  app.require_subcommand(1);
  vasr::cli::add_data_commands(app);
  vasr::cli::add_model_commands(app);
  vasr::cli::add_eval_commands(app);
  try {
    auto args = vasr::cli::expand_config_args(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    const CLI::App* failed = &app;
    for (auto* sub : app.get_subcommands()) failed = sub;
    std::cerr << failed->help();
    return code == 0 ? 2 : code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
