from dif_filters.dif_tool import main

if __name__ == '__main__':
    main()
