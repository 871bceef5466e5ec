# Tests package for metasymnet
