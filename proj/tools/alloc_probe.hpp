#pragma once

// Global operator-new counter for the CLI binary; the bench subcommand uses
// it to assert that the timed inference loop allocates nothing.
long radmat_allocation_count();
