// placeholder entry point; subcommands land once the modules are in place
int main() { return 0; }
