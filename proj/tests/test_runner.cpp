int eqot_placeholder_test_runner = 0;
