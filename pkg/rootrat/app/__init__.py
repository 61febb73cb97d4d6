# rootrat application package
