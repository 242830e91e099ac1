public class Main {
    public static void main(String[] args) {
        int total = 42;
        int parts = 0;
        System.out.println(total / parts);
    }
}
