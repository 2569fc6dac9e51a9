int eqot_placeholder_test_config = 0;
