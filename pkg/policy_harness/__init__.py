# policy_harness/__init__.py
# Empty init file to mark this as a package
